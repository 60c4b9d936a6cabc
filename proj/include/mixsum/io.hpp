#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixsum/core.hpp"
#include "mixsum/dpmm_gibbs.hpp"
#include "mixsum/measures.hpp"

namespace mixsum {

/// Filesystem failures; the message always names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Json = nlohmann::json;

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path + "'");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

/// Non-empty lines not starting with '#', with their 1-based line numbers.
inline std::vector<std::pair<int, std::string_view>> csv_lines(std::string_view text) {
    std::vector<std::pair<int, std::string_view>> out;
    int number = 0;
    while (!text.empty()) {
        ++number;
        auto nl = text.find('\n');
        auto line = trim(text.substr(0, nl));
        if (!line.empty() && line.front() != '#') out.emplace_back(number, line);
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    return out;
}

}  // namespace detail

/// Numeric CSV, one observation per row. A first line that does not parse as
/// numbers is taken as a header.
inline DataMatrix parse_data_csv(std::string_view text, const std::string& source = "<csv>") {
    auto lines = detail::csv_lines(text);
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        auto [number, line] = lines[li];
        auto fields = detail::split_fields(line);
        std::vector<double> row(fields.size());
        bool ok = true;
        for (std::size_t f = 0; f < fields.size() && ok; ++f) ok = detail::parse_number(fields[f], row[f]);
        if (!ok) {
            if (li == 0) continue;
            throw ValidationError(source + ":" + std::to_string(number) + ": non-numeric field in '" + std::string(line) + "'");
        }
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw ValidationError(source + ":" + std::to_string(number) + ": expected " + std::to_string(width) +
                                  " columns, found " + std::to_string(row.size()));
        for (double v : row)
            if (!std::isfinite(v)) throw ValidationError(source + ":" + std::to_string(number) + ": non-finite value");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(source + ": no data rows");
    Matrix m(rows.size(), width);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) m(i, j) = rows[i][j];
    return DataMatrix(std::move(m));
}

inline DataMatrix read_data_csv(const std::string& path) { return parse_data_csv(read_text_file(path), path); }

inline std::string data_to_csv(const DataMatrix& data, const std::vector<std::string>& header = {}) {
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
    if (!header.empty()) out += "\n";
    for (int i = 0; i < data.n(); ++i) {
        for (int j = 0; j < data.dim(); ++j) out += (j ? "," : "") + format_double(data.rows()(i, j));
        out += "\n";
    }
    return out;
}

/// Single column of 1-based labels, optional non-numeric header.
inline LabelVector parse_labels_csv(std::string_view text, const std::string& source = "<labels>") {
    auto lines = detail::csv_lines(text);
    LabelVector out;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        auto [number, line] = lines[li];
        int v = 0;
        if (!detail::parse_number(line, v)) {
            if (li == 0) continue;
            throw ValidationError(source + ":" + std::to_string(number) + ": expected an integer label, got '" +
                                  std::string(line) + "'");
        }
        if (v < 1) throw ValidationError(source + ":" + std::to_string(number) + ": labels are 1-based");
        out.push_back(v);
    }
    if (out.empty()) throw ValidationError(source + ": no labels");
    return out;
}

inline LabelVector read_labels_csv(const std::string& path) { return parse_labels_csv(read_text_file(path), path); }

inline std::string labels_to_csv(const LabelVector& z) {
    std::string out = "label\n";
    for (int v : z) out += std::to_string(v) + "\n";
    return out;
}

inline Json measure_to_json(const MixingMeasure& g) {
    Json atoms = Json::array();
    for (const auto& a : g.atoms()) {
        Json cov = Json::array();
        for (int i = 0; i < a.dim(); ++i) {
            Json row = Json::array();
            for (int j = 0; j < a.dim(); ++j) row.push_back(a.cov()(i, j));
            cov.push_back(std::move(row));
        }
        atoms.push_back({{"mean", std::vector<double>(a.mean().data(), a.mean().data() + a.dim())}, {"cov", std::move(cov)}});
    }
    return {{"weights", g.weights()}, {"atoms", std::move(atoms)}};
}

namespace detail {

inline const Json& require_key(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing \"" + key + "\"");
    return j.at(key);
}

inline std::vector<double> number_array(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ValidationError(where + ": expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace detail

inline MixingMeasure measure_from_json(const Json& j, const std::string& where = "measure") {
    auto weights = detail::number_array(detail::require_key(j, "weights", where), where + ".weights");
    const Json& atoms_json = detail::require_key(j, "atoms", where);
    if (!atoms_json.is_array()) throw ValidationError(where + ".atoms: expected an array");
    std::vector<GaussianAtom> atoms;
    for (std::size_t k = 0; k < atoms_json.size(); ++k) {
        std::string at = where + ".atoms[" + std::to_string(k) + "]";
        auto mean = detail::number_array(detail::require_key(atoms_json[k], "mean", at), at + ".mean");
        const Json& cov_json = detail::require_key(atoms_json[k], "cov", at);
        const int d = static_cast<int>(mean.size());
        if (!cov_json.is_array() || static_cast<int>(cov_json.size()) != d)
            throw ValidationError(at + ".cov: expected " + std::to_string(d) + " rows");
        Matrix cov(d, d);
        for (int i = 0; i < d; ++i) {
            auto row = detail::number_array(cov_json[i], at + ".cov");
            if (static_cast<int>(row.size()) != d)
                throw ValidationError(at + ".cov: row " + std::to_string(i) + " has " + std::to_string(row.size()) + " entries");
            for (int c = 0; c < d; ++c) cov(i, c) = row[c];
        }
        atoms.emplace_back(Eigen::Map<const Vector>(mean.data(), d), SpdMatrix(cov));
    }
    return MixingMeasure(std::move(weights), std::move(atoms));
}

inline MixingMeasure read_measure_json(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw ValidationError(path + ": invalid JSON: " + e.what());
    }
    return measure_from_json(j, path);
}

inline Json draw_to_json(const PosteriorDraw& d) {
    return {{"iteration", d.iteration}, {"labels", d.labels}, {"measure", measure_to_json(d.measure)}};
}

inline PosteriorDraw draw_from_json(const Json& j, const std::string& where) {
    const Json& it = detail::require_key(j, "iteration", where);
    const Json& labels = detail::require_key(j, "labels", where);
    if (!it.is_number_integer()) throw ValidationError(where + ".iteration: expected an integer");
    if (!labels.is_array()) throw ValidationError(where + ".labels: expected an array");
    LabelVector z;
    for (const auto& v : labels) {
        if (!v.is_number_integer() || v.get<int>() < 1) throw ValidationError(where + ".labels: expected 1-based integers");
        z.push_back(v.get<int>());
    }
    auto g = measure_from_json(detail::require_key(j, "measure", where), where + ".measure");
    for (int v : z)
        if (v > static_cast<int>(g.size())) throw ValidationError(where + ".labels: label exceeds the number of atoms");
    return PosteriorDraw{std::move(g), std::move(z), it.get<int>()};
}

inline std::string draws_to_jsonl(const std::vector<PosteriorDraw>& draws) {
    std::string out;
    for (const auto& d : draws) out += draw_to_json(d).dump() + "\n";
    return out;
}

inline std::vector<PosteriorDraw> parse_draws_jsonl(std::string_view text, const std::string& source = "<draws>") {
    std::vector<PosteriorDraw> out;
    for (auto [number, line] : detail::csv_lines(text)) {
        std::string where = source + ":" + std::to_string(number);
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ValidationError(where + ": invalid JSON: " + e.what());
        }
        out.push_back(draw_from_json(j, where));
    }
    if (out.empty()) throw ValidationError(source + ": no draws");
    return out;
}

inline std::vector<PosteriorDraw> read_draws_jsonl(const std::string& path) {
    return parse_draws_jsonl(read_text_file(path), path);
}

}  // namespace mixsum
