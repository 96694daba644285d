#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace rbfplast {

class LinearSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Square sparse system assembled from triplets. For the elasticity problem
/// the unknowns are ordered [u_0..u_{N-1}, v_0..v_{N-1}].
class SparseSystem {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

  explicit SparseSystem(int size) : size_(size), rhs_(Eigen::VectorXd::Zero(size)) {
    if (size < 0) throw std::invalid_argument("negative system size");
  }

  int size() const { return size_; }

  /// Duplicate (row, col) entries are summed on finalize().
  void add(int row, int col, double value) {
    if (row < 0 || row >= size_ || col < 0 || col >= size_) throw std::out_of_range("sparse entry out of range");
    triplets_.emplace_back(row, col, value);
    finalized_ = false;
  }

  void finalize() {
    matrix_.resize(size_, size_);
    matrix_.setFromTriplets(triplets_.begin(), triplets_.end());
    matrix_.makeCompressed();
    finalized_ = true;
  }

  const Matrix& matrix() const {
    if (!finalized_) throw std::logic_error("sparse system not finalized");
    return matrix_;
  }

  Eigen::VectorXd& rhs() { return rhs_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }

  std::vector<int> row_nonzeros() const {
    std::vector<int> counts(size_, 0);
    const Matrix& m = matrix();
    for (int c = 0; c < m.outerSize(); ++c)
      for (Matrix::InnerIterator it(m, c); it; ++it)
        if (it.value() != 0.0) ++counts[it.row()];
    return counts;
  }

  /// Throws when some row holds no nonzero entry.
  void check_invariants() const {
    if (size_ == 0) throw LinearSolverError("empty system");
    const std::vector<int> counts = row_nonzeros();
    for (int r = 0; r < size_; ++r)
      if (counts[r] == 0) throw LinearSolverError("row " + std::to_string(r) + " has no nonzero entry");
  }

 private:
  int size_;
  std::vector<Eigen::Triplet<double>> triplets_;
  Matrix matrix_;
  Eigen::VectorXd rhs_;
  bool finalized_ = false;
};

/// Direct sparse LU factorization, computed once and reused for any number of
/// right-hand sides. solve() is const but shares Eigen's internal workspace
/// handling; callers serialize solves.
class Factorization {
 public:
  explicit Factorization(const SparseSystem& sys) : size_(sys.size()) {
    sys.check_invariants();
    lu_ = std::make_unique<Solver>();
    lu_->analyzePattern(sys.matrix());
    lu_->factorize(sys.matrix());
    if (lu_->info() != Eigen::Success) throw LinearSolverError("sparse LU failed: " + lu_->lastErrorMessage());
  }

  int size() const { return size_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (rhs.size() != size_) throw std::invalid_argument("right-hand side dimension mismatch");
    Eigen::VectorXd x = lu_->solve(rhs);
    if (lu_->info() != Eigen::Success) throw LinearSolverError("sparse LU solve failed");
    return x;
  }

 private:
  using Solver = Eigen::SparseLU<SparseSystem::Matrix, Eigen::COLAMDOrdering<int>>;
  int size_;
  std::unique_ptr<Solver> lu_;
};

inline Factorization factorize(const SparseSystem& sys) { return Factorization(sys); }

inline Eigen::VectorXd solve(const Factorization& f, const Eigen::VectorXd& rhs) { return f.solve(rhs); }

namespace detail {

// Shortest round-trip decimal, always carrying a decimal point or exponent.
inline std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace detail

/// Writes the matrix in 1-based coordinate format, sorted by (row, col):
/// a "%%MatrixMarket" banner, a "rows cols nnz" line, then "row col value".
inline void export_matrix(const SparseSystem& sys, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  Eigen::SparseMatrix<double, Eigen::RowMajor> m = sys.matrix();
  m.makeCompressed();
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (int r = 0; r < m.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, r); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << detail::format_real(it.value()) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace rbfplast
