// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the unit and acceptance suites: temp directories,
// random instances and independent reference implementations.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "lightgcl/data.hpp"
#include "lightgcl/matrix.hpp"
#include "lightgcl/sparse.hpp"

namespace lightgcl::testing {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("lightgcl_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Matrix random_dense(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(rows, cols);
    for (double& x : m.values()) x = g(rng);
    return m;
}

// Sparse matrix with each entry present with probability `density`, values
// uniform in (0.1, 1]. Every row and column gets at least one entry.
inline SparseBipartite random_sparse(std::size_t rows, std::size_t cols, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<std::vector<bool>> present(rows, std::vector<bool>(cols, false));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) present[r][c] = uni(rng) < density;
    std::uniform_int_distribution<std::size_t> pick_c(0, cols - 1), pick_r(0, rows - 1);
    for (std::size_t r = 0; r < rows; ++r) present[r][pick_c(rng)] = true;
    for (std::size_t c = 0; c < cols; ++c) present[pick_r(rng)][c] = true;
    std::vector<Triplet> t;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (present[r][c]) t.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), 0.1 + 0.9 * uni(rng)});
    return SparseBipartite::from_triplets(rows, cols, std::move(t));
}

// Random interaction set in which every user and item has at least one pair.
inline InteractionSet random_interactions(std::size_t users, std::size_t items, double density, std::mt19937_64& rng) {
    const auto s = random_sparse(users, items, density, rng);
    std::vector<Interaction> pairs;
    for (const auto& t : s.triplets()) pairs.push_back({t.row, t.col});
    return InteractionSet::make(users, items, std::move(pairs));
}

// Plain triple-loop dense product, independent of the library kernels.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline double relative_error(const Matrix& got, const Matrix& want) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k) {
        const double d = got.values()[k] - want.values()[k];
        num += d * d;
        den += want.values()[k] * want.values()[k];
    }
    if (den == 0.0) return std::sqrt(num);
    return std::sqrt(num / den);
}

}  // namespace lightgcl::testing
