#include "said/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "said/errors.hpp"
#include "said/model.hpp"

namespace said {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

void check_cell(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") != std::string::npos) {
        throw ConfigError("write_csv: cell contains a comma, quote, or line break: " + cell);
    }
}

bool missing_cell(const std::string& cell) {
    return cell.empty() || cell == "NA" || cell == "na" || cell == "nan" || cell == "NaN";
}

}  // namespace

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

int CsvTable::require_column(const std::string& name) const {
    const int idx = column(name);
    if (idx < 0) throw ConfigError("column '" + name + "' not found in data file");
    return idx;
}

Eigen::VectorXd CsvTable::numeric_column(int index) const {
    if (index < 0 || index >= static_cast<int>(header.size())) {
        throw ConfigError("numeric_column: index out of range");
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string& cell = rows[i][static_cast<std::size_t>(index)];
        if (missing_cell(cell)) {
            out[static_cast<Eigen::Index>(i)] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0') {
            throw ConfigError("column '" + header[static_cast<std::size_t>(index)] +
                              "' has a non-numeric cell: '" + cell + "'");
        }
        out[static_cast<Eigen::Index>(i)] = v;
    }
    return out;
}

std::vector<std::string> CsvTable::string_column(int index) const {
    if (index < 0 || index >= static_cast<int>(header.size())) {
        throw ConfigError("string_column: index out of range");
    }
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[static_cast<std::size_t>(index)]);
    return out;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split_line(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw ConfigError("ragged CSV row in " + path + ": expected " +
                              std::to_string(table.header.size()) + " cells, got " +
                              std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
    if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
        throw ConfigError("write_csv: header size does not match column count");
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    for (std::size_t j = 0; j < header.size(); ++j) {
        check_cell(header[j]);
        out << header[j] << (j + 1 < header.size() ? "," : "\n");
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            out << format_double(values(i, j)) << (j + 1 < values.cols() ? "," : "\n");
        }
    }
    if (!out) throw ConfigError("failed while writing file: " + path);
}

void write_csv_rows(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    for (std::size_t j = 0; j < header.size(); ++j) {
        check_cell(header[j]);
        out << header[j] << (j + 1 < header.size() ? "," : "\n");
    }
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw ConfigError("write_csv: row width does not match header");
        }
        for (std::size_t j = 0; j < row.size(); ++j) {
            check_cell(row[j]);
            out << row[j] << (j + 1 < row.size() ? "," : "\n");
        }
    }
    if (!out) throw ConfigError("failed while writing file: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
    if (!out) throw ConfigError("failed while writing file: " + path);
}

std::string sha1_hex(const std::string& bytes) {
    // Standard SHA-1 (FIPS 180-1) over the whole buffer.
    std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
    const std::uint64_t total_bits = static_cast<std::uint64_t>(bytes.size()) * 8;
    std::string padded = bytes;
    padded.push_back(static_cast<char>(0x80));
    while (padded.size() % 64 != 56) padded.push_back('\0');
    for (int i = 7; i >= 0; --i) {
        padded.push_back(static_cast<char>((total_bits >> (8 * i)) & 0xFF));
    }
    const auto rotl = [](std::uint32_t x, int s) { return (x << s) | (x >> (32 - s)); };
    for (std::size_t chunk = 0; chunk < padded.size(); chunk += 64) {
        std::uint32_t w[80];
        for (int t = 0; t < 16; ++t) {
            w[t] = 0;
            for (int b = 0; b < 4; ++b) {
                w[t] = (w[t] << 8) |
                       static_cast<std::uint8_t>(padded[chunk + 4 * static_cast<std::size_t>(t) +
                                                        static_cast<std::size_t>(b)]);
            }
        }
        for (int t = 16; t < 80; ++t) w[t] = rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int t = 0; t < 80; ++t) {
            std::uint32_t f, k;
            if (t < 20) {
                f = (b & c) | ((~b) & d);
                k = 0x5A827999u;
            } else if (t < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (t < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            const std::uint32_t tmp = rotl(a, 5) + f + e + k + w[t];
            e = d;
            d = c;
            c = rotl(b, 30);
            b = a;
            a = tmp;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }
    char out[41];
    std::snprintf(out, sizeof(out), "%08x%08x%08x%08x%08x", h[0], h[1], h[2], h[3], h[4]);
    return out;
}

namespace {

constexpr char kSamplesMagic[8] = {'S', 'A', 'I', 'D', 'S', 'M', 'P', '1'};

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
    const std::int64_t rows = m.rows(), cols = m.cols();
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double)) * rows * cols);
}

Eigen::MatrixXd read_matrix(std::ifstream& in, const std::string& path) {
    std::int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in || rows < 0 || cols < 0 || rows > (1LL << 32) || cols > (1LL << 32)) {
        throw ConfigError("corrupt samples file: " + path);
    }
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * rows * cols);
    if (!in) throw ConfigError("corrupt samples file (truncated): " + path);
    return m;
}

}  // namespace

void save_samples(const std::string& path, const PosteriorSamples& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out.write(kSamplesMagic, sizeof(kSamplesMagic));
    const std::int64_t dims[7] = {s.iterations, s.burnin, s.n, s.p, s.q, s.m, s.d};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(&s.seed), sizeof(s.seed));
    for (const Eigen::VectorXd* v : {&s.alpha, &s.nu2, &s.w_aux, &s.sigma2, &s.acceptance_rate}) {
        write_matrix(out, *v);
    }
    for (const Eigen::MatrixXd* m :
         {&s.eta, &s.gamma, &s.lambda, &s.theta1, &s.phi1, &s.theta2, &s.phi2, &s.tau1, &s.tau2,
          &s.kappa, &s.rejected_count, &s.accepted}) {
        write_matrix(out, *m);
    }
    if (!out) throw ConfigError("failed while writing file: " + path);
}

PosteriorSamples load_samples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open samples file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kSamplesMagic, sizeof(magic)) != 0) {
        throw ConfigError("corrupt samples file (bad header): " + path);
    }
    std::int64_t dims[7];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    PosteriorSamples s;
    s.iterations = static_cast<int>(dims[0]);
    s.burnin = static_cast<int>(dims[1]);
    s.n = static_cast<int>(dims[2]);
    s.p = static_cast<int>(dims[3]);
    s.q = static_cast<int>(dims[4]);
    s.m = static_cast<int>(dims[5]);
    s.d = static_cast<int>(dims[6]);
    in.read(reinterpret_cast<char*>(&s.seed), sizeof(s.seed));
    if (!in || s.iterations < 0 || s.burnin < 0 || s.burnin > s.iterations || s.p < 0) {
        throw ConfigError("corrupt samples file (bad dimensions): " + path);
    }
    s.pairs = all_pairs(s.p);
    for (Eigen::VectorXd* v : {&s.alpha, &s.nu2, &s.w_aux, &s.sigma2, &s.acceptance_rate}) {
        const Eigen::MatrixXd m = read_matrix(in, path);
        if (m.cols() != 1 && m.size() != 0) {
            throw ConfigError("corrupt samples file (bad vector block): " + path);
        }
        *v = m.col(0);
    }
    for (Eigen::MatrixXd* m :
         {&s.eta, &s.gamma, &s.lambda, &s.theta1, &s.phi1, &s.theta2, &s.phi2, &s.tau1, &s.tau2,
          &s.kappa, &s.rejected_count, &s.accepted}) {
        *m = read_matrix(in, path);
    }
    const int kept = s.kept();
    const int npairs = s.num_pairs();
    const bool consistent =
        s.alpha.size() == kept && s.sigma2.size() == kept && s.eta.rows() == kept &&
        s.eta.cols() == s.q && s.gamma.cols() == static_cast<Eigen::Index>(s.p) * s.d &&
        s.theta1.cols() == static_cast<Eigen::Index>(npairs) * s.m &&
        s.tau1.cols() == npairs && s.acceptance_rate.size() == npairs;
    if (!consistent) throw ConfigError("corrupt samples file (inconsistent blocks): " + path);
    return s;
}

}  // namespace said
