#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

namespace gcstar {

using SparseMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Rw2dVariant { Paper, SquaredLaplacian };

// Unit-scale intrinsic prior precision with its rank-deficiency
// bookkeeping.  Q is symmetric PSD; null_basis spans the improper
// directions exactly; constraint rows are the identifiability conditions
// a model attaches to the block (by default the null directions).
struct PrecisionModel {
  int dim = 0;
  SparseMat Q;
  int rank_deficiency = 0;
  std::vector<Vec> null_basis;
  Mat constraint;  // rows = constraints over this block

  int rank() const { return dim - rank_deficiency; }
  void validate(double tol = 1e-9) const;
};

// Q = D1'D1 with first differences; null space {1}.
PrecisionModel rw1_precision(int m);

// Q = D2'D2 with second differences; null space {1, linear}.
PrecisionModel rw2_precision(int m);

// Lattice field on n1 x n2 (row-major: index = r*n2 + c).  The Paper
// variant assembles I (x) D1'D1 + D2'D2 (x) I + 2 D1'D1 (x) D2'D2; the
// SquaredLaplacian variant the classical D2'D2 (x) I + I (x) D2'D2 +
// 2 D1'D1 (x) D1'D1.  PSD is verified by a dense eigencheck at build
// time for dim <= 2500.
PrecisionModel rw2d_precision(int n1, int n2,
                              Rw2dVariant variant = Rw2dVariant::Paper);

// Exchangeable Gaussian block: Q = I, proper (rank deficiency 0).
PrecisionModel iid_precision(int m);

// Rescale Q so the geometric mean of the marginal variances of the
// null-space-constrained generalized inverse is one.  Errors if the
// numeric null space is larger than declared.
PrecisionModel scale_to_unit_gv(const PrecisionModel& pm);

// log of the product of the nonzero eigenvalues (generalized determinant),
// computed on the orthogonal complement of the declared null basis.
double generalized_log_det(const PrecisionModel& pm);

// Smallest eigenvalue by dense decomposition (PSD verification helper).
double min_eigenvalue_dense(const SparseMat& Q);

}  // namespace gcstar
