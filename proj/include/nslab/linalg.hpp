#pragma once

/// Dense vectors, matrices and small fixed-rank tensors.

#include <Eigen/Dense>

#include <vector>

namespace nslab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// n×n×n array, row-major in (i, j, k).
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}
    int dim() const { return n_; }
    double& operator()(int i, int j, int k) { return data_[idx(i, j, k)]; }
    double operator()(int i, int j, int k) const { return data_[idx(i, j, k)]; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    std::size_t idx(int i, int j, int k) const { return static_cast<std::size_t>((i * n_ + j) * n_ + k); }
    int n_ = 0;
    std::vector<double> data_;
};

/// n×n×n×n array, row-major in (a, b, c, d).
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n * n), 0.0) {}
    int dim() const { return n_; }
    double& operator()(int a, int b, int c, int d) { return data_[idx(a, b, c, d)]; }
    double operator()(int a, int b, int c, int d) const { return data_[idx(a, b, c, d)]; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    std::size_t idx(int a, int b, int c, int d) const {
        return static_cast<std::size_t>(((a * n_ + b) * n_ + c) * n_ + d);
    }
    int n_ = 0;
    std::vector<double> data_;
};

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

} // namespace nslab
