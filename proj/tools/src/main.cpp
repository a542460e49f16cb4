#include "selftrain/cli/cli.hpp"

int main(int argc, char** argv) {
    return selftrain::cli::run_cli(argc, argv);
}
