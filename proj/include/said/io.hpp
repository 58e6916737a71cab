#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "said/sampler.hpp"

namespace said {

// Comma-separated table with a header row.  Cells stay as strings until a
// column is read with a typed accessor.  No quoting: cells must not contain
// commas, quotes, or line breaks.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;           // -1 when absent
    int require_column(const std::string& name) const;   // throws, naming the column
    // Numeric view of one column; empty, "NA", or "nan" cells become NaN.
    Eigen::VectorXd numeric_column(int index) const;
    std::vector<std::string> string_column(int index) const;
};

CsvTable read_csv(const std::string& path);

// Shortest representation that round-trips the double exactly.
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);
void write_csv_rows(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// SHA-1 digest as lowercase hex, for content-addressed run manifests.
std::string sha1_hex(const std::string& bytes);

// Posterior draws persisted as a small self-describing binary file
// (native-endian doubles), so reports can be regenerated without refitting.
void save_samples(const std::string& path, const PosteriorSamples& samples);
PosteriorSamples load_samples(const std::string& path);

}  // namespace said
