#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wkam/errors.hpp"
#include "wkam/tropical.hpp"

namespace wkam {

/// 17 significant digits: enough for a lossless double round trip.
inline std::string format_double(double x) {
    if (!is_reachable(x)) return "inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline double parse_entry(const std::string& tok) {
    if (tok == "inf" || tok == "+inf") return kUnreachable;
    try {
        size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw config_error("matrix csv: bad entry \"" + tok + "\"");
    }
}

/// Row-major CSV with the "inf" literal for unreachable entries.
inline void write_matrix_csv(const std::filesystem::path& path, const TropicalMatrix& m) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open " + path.string() + " for writing");
    for (int i = 0; i < m.dim(); ++i) {
        for (int j = 0; j < m.dim(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

inline TropicalMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) row.push_back(parse_entry(tok));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw config_error("matrix csv " + path.string() + " is empty");
    for (const auto& r : rows)
        if (r.size() != rows.size())
            throw config_error("matrix csv " + path.string() + " is not square");
    return TropicalMatrix::from_rows(rows);
}

/// Matrices in JSON: metadata plus a flat row-major array; unreachable
/// entries appear as the string "inf" (JSON numbers cannot carry infinity).
inline nlohmann::json matrix_to_json(const TropicalMatrix& m) {
    nlohmann::json entries = nlohmann::json::array();
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) {
            double v = m(i, j);
            if (is_reachable(v)) entries.push_back(v);
            else entries.push_back("inf");
        }
    return nlohmann::json{{"dim", m.dim()}, {"entries", std::move(entries)}};
}

inline TropicalMatrix matrix_from_json(const nlohmann::json& j) {
    int dim = j.at("dim").get<int>();
    std::vector<double> entries;
    for (const auto& e : j.at("entries")) {
        if (e.is_string()) {
            if (e.get<std::string>() != "inf")
                throw config_error("matrix json: bad entry " + e.dump());
            entries.push_back(kUnreachable);
        } else {
            entries.push_back(e.get<double>());
        }
    }
    return TropicalMatrix(dim, std::move(entries));
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(path.string() + ": " + e.what());
    }
}

}  // namespace wkam
