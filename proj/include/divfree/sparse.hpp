// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace divfree {

/// Row-compressed real sparse matrix with a symmetry flag. Storage and
/// products are delegated to Eigen; assembled matrices are immutable.
class SparseMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  SparseMatrix() = default;

  static SparseMatrix from_triplets(int rows, int cols,
                                    std::vector<Eigen::Triplet<double>>& trips,
                                    bool symmetric) {
    SparseMatrix s;
    s.m_.resize(rows, cols);
    s.m_.setFromTriplets(trips.begin(), trips.end());
    s.m_.makeCompressed();
    trips.clear();
    trips.shrink_to_fit();
    s.symmetric_ = symmetric;
    return s;
  }

  static SparseMatrix from_eigen(Storage m, bool symmetric) {
    SparseMatrix s;
    s.m_ = std::move(m);
    s.m_.makeCompressed();
    s.symmetric_ = symmetric;
    return s;
  }

  int rows() const { return static_cast<int>(m_.rows()); }
  int cols() const { return static_cast<int>(m_.cols()); }
  long nnz() const { return static_cast<long>(m_.nonZeros()); }
  bool symmetric_flag() const { return symmetric_; }

  const Storage& eigen() const { return m_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return m_ * x; }
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& x) const {
    return m_.transpose() * x;
  }

  double max_abs() const {
    double m = 0.0;
    for (int k = 0; k < m_.outerSize(); ++k)
      for (Storage::InnerIterator it(m_, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
  }

  /// max |A - A^T|.
  double asymmetry() const {
    Storage d = m_ - Storage(m_.transpose());
    double m = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
      for (Storage::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
  }

  /// Coordinate-format ASCII export: one `row col value` line per entry, 0-based.
  void save_coordinate(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("SparseMatrix: cannot open " + path);
    char buf[96];
    for (int k = 0; k < m_.outerSize(); ++k)
      for (Storage::InnerIterator it(m_, k); it; ++it) {
        std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()),
                      static_cast<long>(it.col()), it.value());
        out << buf;
      }
  }

 private:
  Storage m_;
  bool symmetric_ = false;
};

/// Cached direct factorization of an SPD matrix.
class SpdFactor {
 public:
  explicit SpdFactor(const SparseMatrix& a) {
    Eigen::SparseMatrix<double> col(a.eigen());
    ldlt_.compute(col);
    if (ldlt_.info() != Eigen::Success)
      throw std::runtime_error("SpdFactor: factorization failed");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = ldlt_.solve(b);
    if (ldlt_.info() != Eigen::Success) throw std::runtime_error("SpdFactor: solve failed");
    return x;
  }

  /// All pivots strictly positive (definiteness check).
  bool positive_definite() const {
    const auto& d = ldlt_.vectorD();
    for (int i = 0; i < d.size(); ++i)
      if (!(d[i] > 0.0)) return false;
    return true;
  }

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

/// Cached direct factorization of a general (indefinite) sparse matrix.
class LuFactor {
 public:
  explicit LuFactor(const Eigen::SparseMatrix<double>& a) {
    lu_.compute(a);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("LuFactor: factorization failed (singular system?)");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = lu_.solve(b);
    if (lu_.info() != Eigen::Success) throw std::runtime_error("LuFactor: solve failed");
    return x;
  }

 private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace divfree
