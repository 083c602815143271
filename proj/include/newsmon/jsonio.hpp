#pragma once

// Small helpers shared by the model file formats.

#include "newsmon/error.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace newsmon::jsonio {

/// Row-major nested arrays.
inline nlohmann::json matrix(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = m(r, c);
        }
        rows.push_back(row);
    }
    return rows;
}

/// Inverse of matrix(); `cols` is needed for matrices without rows.
inline Eigen::MatrixXd to_matrix(const nlohmann::json& j, Eigen::Index cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        auto row = j[r].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw DataError("ragged matrix in model file");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)];
        }
    }
    return m;
}

inline nlohmann::json vector(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd to_vector(const nlohmann::json& j) {
    auto values = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline void write_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << j.dump() << '\n';
}

inline nlohmann::json read_file(const std::string& path, const std::string& what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + what + " " + path);
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed " + what + " file: " + e.what());
    }
}

} // namespace newsmon::jsonio
