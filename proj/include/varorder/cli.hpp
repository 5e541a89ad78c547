#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace varorder {

/// Exit codes of the command-line front end.
enum ExitCode { exit_ok = 0, exit_input = 2, exit_solver = 3, exit_nonconvergence = 4 };

/// Grid syntax `lo:hi:logN` or `lo:hi:linN`.
std::vector<double> parse_grid(const std::string& text);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    int column(const std::string& name) const;  // -1 if absent
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

CsvTable read_csv(const std::string& path);
/// Numbers are written with 17 significant digits.
std::string format_csv(const CsvTable& table);

std::string sha256_hex(const std::string& bytes);

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

/// Entry point shared by the executable and the tests. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace varorder
