#pragma once

#include <filesystem>
#include <string>

#include "geoclust/common.hpp"
#include "geoclust/rng.hpp"

namespace testutil {

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("geoclust_test_" + tag + "_" + std::to_string(counter()++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path path_;
};

inline geoclust::Matrix random_matrix(std::size_t rows, std::size_t cols,
                                      geoclust::SplitMix64& rng, double lo = 0.0,
                                      double hi = 1.0) {
    geoclust::Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

}  // namespace testutil
