#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace xgcn {

// Dense rank-3 tensor of doubles, laid out [channel][frame][keypoint] with
// the keypoint index fastest.
struct Tensor3 {
    int c = 0;
    int t = 0;
    int v = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int channels, int frames, int keypoints, double fill = 0.0)
        : c(channels), t(frames), v(keypoints),
          data(static_cast<std::size_t>(channels) * frames * keypoints, fill) {
        if (channels < 0 || frames < 0 || keypoints < 0)
            throw std::invalid_argument("Tensor3: negative dimension");
    }

    double& at(int ci, int ti, int vi) {
        return data[(static_cast<std::size_t>(ci) * t + ti) * v + vi];
    }
    const double& at(int ci, int ti, int vi) const {
        return data[(static_cast<std::size_t>(ci) * t + ti) * v + vi];
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor3& o) const { return c == o.c && t == o.t && v == o.v; }

    void fill(double x) { std::fill(data.begin(), data.end(), x); }
};

inline Tensor3 zeros_like(const Tensor3& x) { return Tensor3(x.c, x.t, x.v); }

// Square V x V matrix, row-major.
struct MatV {
    int n = 0;
    std::vector<double> data;

    MatV() = default;
    explicit MatV(int size, double fill = 0.0)
        : n(size), data(static_cast<std::size_t>(size) * size, fill) {}

    double& at(int r, int col) { return data[static_cast<std::size_t>(r) * n + col]; }
    double at(int r, int col) const { return data[static_cast<std::size_t>(r) * n + col]; }
};

}  // namespace xgcn
