#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "dash/hand_model.hpp"

namespace dash::test {

inline std::string data_path(const std::string& name) { return std::string(DASH_DATA_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("dash-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

/// Dense matrix form of the joint->motor model: m = A q + c with
/// q = (side, fwd, pip, dip). Written independently of dash::calibration.
inline Eigen::Vector3d oracle_motors(const CalibrationWeights& w, const Eigen::Vector4d& q) {
    Eigen::Matrix<double, 3, 4> a;
    a << w.w1, w.w3, 0.0, 0.0,
         w.w2, w.w4, 0.0, 0.0,
         0.0, 0.0, w.w5 / 2.0, w.w6 / 2.0;
    const Eigen::Vector3d c(w.b1, w.b2, (w.b3 + w.b4) / 2.0);
    return a * q + c;
}

inline const char* kVersions[] = {"v1", "v2", "v3", "v4", "v5"};

}  // namespace dash::test
