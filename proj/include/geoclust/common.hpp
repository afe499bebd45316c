#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace geoclust {

inline constexpr const char* kVersion = "0.1.0";

// Bad configuration (unknown method, inconsistent options). CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or missing input data (files, shapes, bounds). CLI exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numeric degeneracy or failure (non-finite values, no elbow, zero variance).
// CLI exit code 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles. All in-memory arithmetic in this
// project is 64-bit; 32-bit conversion happens only at the disk boundary.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

}  // namespace geoclust
