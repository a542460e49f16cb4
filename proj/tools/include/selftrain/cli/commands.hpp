#pragma once

#include <iosfwd>
#include <string>

namespace selftrain::cli {

/// gen-data: materialize the configured synthetic benchmark as CSV files
/// (labeled/unlabeled/test plus the hidden-labels diagnostics table).
void cmd_gen_data(const std::string& config_path, std::ostream& out);

/// run: execute the configured experiment(s); writes the iteration
/// journal, per-iteration selection audits and the final reports.
void cmd_run(const std::string& config_path, const std::string& out_dir_override,
             std::ostream& out);

/// report: regenerate the human-readable tables from a journal, without
/// recomputation.
void cmd_report(const std::string& journal_path, std::ostream& out);

}  // namespace selftrain::cli
