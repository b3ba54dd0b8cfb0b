#include "gcstar/precision.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <string>

#include "gcstar/errors.hpp"

namespace gcstar {

namespace {

SparseMat first_difference(int m) {
  SparseMat d(m - 1, m);
  d.reserve(Eigen::VectorXi::Constant(m - 1, 2));
  for (int i = 0; i < m - 1; ++i) {
    d.insert(i, i) = -1.0;
    d.insert(i, i + 1) = 1.0;
  }
  d.makeCompressed();
  return d;
}

SparseMat second_difference(int m) {
  SparseMat d(m - 2, m);
  d.reserve(Eigen::VectorXi::Constant(m - 2, 3));
  for (int i = 0; i < m - 2; ++i) {
    d.insert(i, i) = 1.0;
    d.insert(i, i + 1) = -2.0;
    d.insert(i, i + 2) = 1.0;
  }
  d.makeCompressed();
  return d;
}

SparseMat identity(int m) {
  SparseMat id(m, m);
  id.setIdentity();
  return id;
}

// Symmetrize exactly: Q <- (Q + Q')/2 entrywise to kill one-ulp asymmetry
// from the sparse products.
SparseMat symmetrize(const SparseMat& q) {
  SparseMat qt = SparseMat(q.transpose());
  SparseMat sum = q + qt;
  sum *= 0.5;
  sum.prune(0.0);
  sum.makeCompressed();
  return sum;
}

Vec ones_vec(int m) { return Vec::Ones(m); }

Vec linear_vec(int m) {
  Vec v(m);
  for (int i = 0; i < m; ++i) v[i] = static_cast<double>(i + 1);
  return v;
}

Mat rows_from(const std::vector<Vec>& basis) {
  Mat a(static_cast<int>(basis.size()), basis.empty() ? 0 : basis[0].size());
  for (int i = 0; i < a.rows(); ++i) a.row(i) = basis[static_cast<size_t>(i)];
  return a;
}

// Dense symmetric eigendecomposition shared by PSD verification, scaling,
// and the generalized determinant.  Errors when the numeric null dimension
// disagrees with the declared one.
struct EigenParts {
  Vec values;
  Mat vectors;
  double tol;
};

EigenParts checked_eigendecomposition(const PrecisionModel& pm) {
  if (pm.dim > 4000) {
    throw DomainError("precision eigendecomposition: dim " +
                      std::to_string(pm.dim) + " above dense-path limit");
  }
  const Mat dense = Mat(pm.Q);
  Eigen::SelfAdjointEigenSolver<Mat> es(dense);
  if (es.info() != Eigen::Success) {
    throw FactorizationError("precision eigendecomposition failed");
  }
  EigenParts parts;
  parts.values = es.eigenvalues();
  parts.vectors = es.eigenvectors();
  // Null-direction threshold: far above eigensolver noise on exact zeros
  // (~eps*max), far below the near-null planar modes a TPS mesh carries
  // (those are genuinely positive and stay declared-positive).
  const double max_eig = std::max(parts.values.maxCoeff(), 1e-300);
  parts.tol = 1e-14 * max_eig * std::max(1, pm.dim);
  int null_count = 0;
  for (int i = 0; i < parts.values.size(); ++i) {
    if (parts.values[i] < parts.tol) ++null_count;
    if (parts.values[i] < -parts.tol) {
      throw FactorizationError("precision matrix has negative eigenvalue " +
                               std::to_string(parts.values[i]));
    }
  }
  if (null_count != pm.rank_deficiency) {
    throw FactorizationError("precision matrix singular beyond declared rank: " +
                             std::to_string(null_count) + " null directions, " +
                             std::to_string(pm.rank_deficiency) + " declared");
  }
  return parts;
}

}  // namespace

void PrecisionModel::validate(double tol) const {
  if (dim <= 0 || Q.rows() != dim || Q.cols() != dim) {
    throw DomainError("PrecisionModel: bad dimensions");
  }
  if (static_cast<int>(null_basis.size()) != rank_deficiency) {
    throw DomainError("PrecisionModel: rank_deficiency != |null_basis|");
  }
  for (const Vec& v : null_basis) {
    const double resid = (Q * v).cwiseAbs().maxCoeff() / std::max(1.0, v.cwiseAbs().maxCoeff());
    if (resid > tol) {
      throw DomainError("PrecisionModel: null-space residual " + std::to_string(resid));
    }
  }
  if (constraint.rows() > 0) {
    Eigen::ColPivHouseholderQR<Mat> qr(constraint.transpose());
    if (qr.rank() != constraint.rows()) {
      throw DomainError("PrecisionModel: constraint matrix is row-rank-deficient");
    }
  }
}

PrecisionModel rw1_precision(int m) {
  if (m < 2) throw DomainError("rw1_precision: need m >= 2");
  PrecisionModel pm;
  pm.dim = m;
  const SparseMat d1 = first_difference(m);
  pm.Q = symmetrize(SparseMat(d1.transpose() * d1));
  pm.rank_deficiency = 1;
  pm.null_basis = {ones_vec(m)};
  pm.constraint = rows_from(pm.null_basis);
  return pm;
}

PrecisionModel rw2_precision(int m) {
  if (m < 3) throw DomainError("rw2_precision: need m >= 3");
  PrecisionModel pm;
  pm.dim = m;
  const SparseMat d2 = second_difference(m);
  pm.Q = symmetrize(SparseMat(d2.transpose() * d2));
  pm.rank_deficiency = 2;
  pm.null_basis = {ones_vec(m), linear_vec(m)};
  // Default identifiability constraint is sum-to-zero only; the linear
  // direction is constrained by the model layer when the same covariate
  // also enters linearly.
  pm.constraint = Mat(1, m);
  pm.constraint.row(0) = ones_vec(m).transpose();
  return pm;
}

PrecisionModel rw2d_precision(int n1, int n2, Rw2dVariant variant) {
  if (n1 < 3 || n2 < 3) throw DomainError("rw2d_precision: need n1, n2 >= 3");
  PrecisionModel pm;
  pm.dim = n1 * n2;

  const SparseMat q1_rows = [&] { auto d = first_difference(n1); return SparseMat(d.transpose() * d); }();
  const SparseMat q1_cols = [&] { auto d = first_difference(n2); return SparseMat(d.transpose() * d); }();
  const SparseMat q2_rows = [&] { auto d = second_difference(n1); return SparseMat(d.transpose() * d); }();
  const SparseMat q2_cols = [&] { auto d = second_difference(n2); return SparseMat(d.transpose() * d); }();

  SparseMat q;
  if (variant == Rw2dVariant::Paper) {
    // I (x) D1'D1  +  D2'D2 (x) I  +  2 D1'D1 (x) D2'D2
    SparseMat cross = SparseMat(Eigen::kroneckerProduct(q1_rows, q2_cols));
    q = SparseMat(Eigen::kroneckerProduct(identity(n1), q1_cols)) +
        SparseMat(Eigen::kroneckerProduct(q2_rows, identity(n2))) +
        SparseMat(2.0 * cross);
  } else {
    // Classical squared-Laplacian lattice TPS.
    SparseMat cross = SparseMat(Eigen::kroneckerProduct(q1_rows, q1_cols));
    q = SparseMat(Eigen::kroneckerProduct(q2_rows, identity(n2))) +
        SparseMat(Eigen::kroneckerProduct(identity(n1), q2_cols)) +
        SparseMat(2.0 * cross);
  }
  pm.Q = symmetrize(q);

  // Exact null spaces of the two Kronecker sums (row index varies slowly).
  const Vec ones = ones_vec(pm.dim);
  Vec row_linear(pm.dim);
  Vec col_linear(pm.dim);
  for (int r = 0; r < n1; ++r) {
    for (int c = 0; c < n2; ++c) {
      const int idx = r * n2 + c;
      row_linear[idx] = static_cast<double>(r + 1) - 0.5 * (n1 + 1);
      col_linear[idx] = static_cast<double>(c + 1) - 0.5 * (n2 + 1);
    }
  }
  if (variant == Rw2dVariant::Paper) {
    pm.rank_deficiency = 2;
    pm.null_basis = {ones, row_linear};
  } else {
    pm.rank_deficiency = 3;
    pm.null_basis = {ones, row_linear, col_linear};
  }
  pm.constraint = rows_from(pm.null_basis);

  if (pm.dim <= 2500) {
    checked_eigendecomposition(pm);  // PSD + null-dimension verification
  }
  return pm;
}

PrecisionModel iid_precision(int m) {
  if (m < 1) throw DomainError("iid_precision: need m >= 1");
  PrecisionModel pm;
  pm.dim = m;
  pm.Q = identity(m);
  pm.rank_deficiency = 0;
  pm.constraint = Mat(0, m);
  return pm;
}

PrecisionModel scale_to_unit_gv(const PrecisionModel& pm) {
  pm.validate();
  const EigenParts parts = checked_eigendecomposition(pm);
  // Marginal variances of the generalized inverse on the non-null span.
  Vec marg_var = Vec::Zero(pm.dim);
  for (int i = 0; i < parts.values.size(); ++i) {
    if (parts.values[i] < parts.tol) continue;
    marg_var += parts.vectors.col(i).cwiseAbs2() / parts.values[i];
  }
  double log_sum = 0.0;
  for (int j = 0; j < pm.dim; ++j) log_sum += std::log(marg_var[j]);
  const double geo_mean = std::exp(log_sum / pm.dim);

  PrecisionModel out = pm;
  out.Q = pm.Q * geo_mean;
  out.Q.makeCompressed();
  return out;
}

double generalized_log_det(const PrecisionModel& pm) {
  const EigenParts parts = checked_eigendecomposition(pm);
  double log_det = 0.0;
  for (int i = 0; i < parts.values.size(); ++i) {
    if (parts.values[i] >= parts.tol) log_det += std::log(parts.values[i]);
  }
  return log_det;
}

double min_eigenvalue_dense(const SparseMat& Q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(Q), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace gcstar
