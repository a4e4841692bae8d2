#include "cos2phi/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cos2phi/errors.hpp"

namespace cos2phi {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // also folds -0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, 16);
    std::string s(buf, res.ptr);
    return std::string(16 - s.size(), '0') + s;
}

CsvWriter::CsvWriter(const Provenance &prov) {
    text_ += std::string("# tool: cos2phi ") + kToolVersion + "\n";
    text_ += "# config_hash: " + hex64(prov.config_hash) + "\n";
    text_ += "# command: " + prov.command + "\n";
    text_ += "# seed: " + std::to_string(prov.seed) + "\n";
}

void CsvWriter::header(const std::vector<std::string> &names) { row(names); }

void CsvWriter::row(const std::vector<double> &values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) text_ += ',';
        text_ += format_number(values[i]);
    }
    text_ += '\n';
}

void CsvWriter::row(const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ',';
        text_ += cells[i];
    }
    text_ += '\n';
}

void CsvWriter::write(const std::filesystem::path &path) const { write_text(path, text_); }

int CsvTable::column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.push_back(trim(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return cells;
}

}  // namespace

CsvTable parse_csv(const std::string &text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (!have_header) {
            t.header = split(s);
            have_header = true;
        } else {
            t.rows.push_back(split(s));
        }
    }
    if (!have_header) throw ValidationError("csv", "no header line");
    return t;
}

CsvTable read_csv(const std::filesystem::path &path) { return parse_csv(read_text(path)); }

double parse_number(const std::string &cell, const std::string &where) {
    if (cell.empty() || cell == "nan" || cell == "NaN") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const char *first = cell.data();
    if (*first == '+') ++first;
    auto res = std::from_chars(first, cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ValidationError(where, "not a number: '" + cell + "'");
    return v;
}

std::string read_text(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("file", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("file", "cannot write " + path.string());
    out << text;
    if (!out) throw ValidationError("file", "write failed for " + path.string());
}

SpectroscopyDataset dataset_from_csv(const CsvTable &table) {
    const char *names[] = {"phi_bias", "phi_ctrl", "f01_ghz", "sigma_ghz"};
    int idx[4];
    for (int k = 0; k < 4; ++k) {
        idx[k] = table.column(names[k]);
        if (idx[k] < 0) throw ValidationError("dataset", std::string("missing column ") + names[k]);
    }
    SpectroscopyDataset d;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &row = table.rows[r];
        const std::string where = "dataset row " + std::to_string(r + 1);
        if (row.size() != table.header.size()) throw ValidationError(where, "wrong number of cells");
        SpectroscopyRow s;
        s.phi_bias = parse_number(row[idx[0]], where);
        s.phi_ctrl = parse_number(row[idx[1]], where);
        s.f01 = parse_number(row[idx[2]], where);
        s.sigma = parse_number(row[idx[3]], where);
        d.rows.push_back(s);
    }
    d.validate();
    return d;
}

std::string dataset_to_csv(const SpectroscopyDataset &data, const Provenance &prov) {
    CsvWriter w(prov);
    w.header({"phi_bias", "phi_ctrl", "f01_ghz", "sigma_ghz"});
    for (const auto &r : data.rows) w.row({r.phi_bias, r.phi_ctrl, r.f01, r.sigma});
    return w.str();
}

Heatmap heatmap_from_csv(const CsvTable &table) {
    if (table.header.size() < 3 || table.header[0] != "fbl_ma")
        throw ValidationError("heatmap", "first row must be fbl_ma,<fbl currents>");
    const int nf = static_cast<int>(table.header.size()) - 1;
    const int nc = static_cast<int>(table.rows.size());
    Heatmap h;
    h.fbl.resize(nf);
    for (int i = 0; i < nf; ++i) h.fbl[i] = parse_number(table.header[i + 1], "heatmap.fbl");
    h.coil.resize(nc);
    h.values.resize(nf, nc);
    for (int j = 0; j < nc; ++j) {
        const auto &row = table.rows[j];
        const std::string where = "heatmap row " + std::to_string(j + 1);
        if (static_cast<int>(row.size()) != nf + 1) throw ValidationError(where, "wrong number of cells");
        h.coil[j] = parse_number(row[0], where);
        for (int i = 0; i < nf; ++i) h.values(i, j) = parse_number(row[i + 1], where);
    }
    h.validate();
    return h;
}

std::string heatmap_to_csv(const Heatmap &h, const Provenance &prov) {
    CsvWriter w(prov);
    std::vector<std::string> head{"fbl_ma"};
    for (Eigen::Index i = 0; i < h.fbl.size(); ++i) head.push_back(format_number(h.fbl[i]));
    w.header(head);
    for (Eigen::Index j = 0; j < h.coil.size(); ++j) {
        std::vector<double> row{h.coil[j]};
        for (Eigen::Index i = 0; i < h.fbl.size(); ++i) row.push_back(h.values(i, j));
        w.row(row);
    }
    return w.str();
}

}  // namespace cos2phi
