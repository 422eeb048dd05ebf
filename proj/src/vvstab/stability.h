#pragma once

#include <Eigen/Dense>

namespace vvstab {

// Largest singular value by power iteration on A^T A (relative tolerance
// 1e-10, at most 10000 iterations). Throws NumericalError otherwise.
double SpectralNorm(const Eigen::MatrixXd& A);

// Stack per-node constants into the 2n x n matrix [diag(C_p); diag(C_q)].
Eigen::MatrixXd StackLipschitz(const Eigen::VectorXd& c_p,
                               const Eigen::VectorXd& c_q);

struct CertificateInputs {
  Eigen::MatrixXd Z;      // n x 2n
  Eigen::MatrixXd C_s;    // 2n x n
  Eigen::VectorXd T;      // diagonal of the 2n x 2n time-constant matrix
  Eigen::MatrixXd M;      // 2n x 2n; empty means M = T
  Eigen::MatrixXd P;      // n x n
  Eigen::MatrixXd H;      // (l+m) x (l+m), or l x l for Theta
  Eigen::MatrixXd Gamma;  // diagonal gains matching H

  int n() const { return static_cast<int>(Z.rows()); }
};

struct StabilityReport {
  double sigma = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double margin = 0.0;
  bool satisfied = false;
};

// -lambda_min(M T^-1) + lambda_max(M T^-1) ||C_s Z||_2 <= 0.
// Throws CertificateInputError for inconsistent shapes or non-PD M.
StabilityReport CheckSigmaBound(const CertificateInputs& inputs);

// Lambda = P Z T^-1 C_s (I^T B) - I^T B Gamma H with I = [I_n; I_n].
// B is 2n x (l+m) with 0/1 entries and at most one 1 per row and column.
Eigen::MatrixXd BuildLambda(const CertificateInputs& inputs,
                            const Eigen::MatrixXd& B);

// Theta = P Z T^-1 C_s D - D Gamma_v H with D an n x l placement matrix.
Eigen::MatrixXd BuildTheta(const CertificateInputs& inputs,
                           const Eigen::MatrixXd& D);

struct NonpositiveCheck {
  bool ok = true;
  double worst = 0.0;
  int row = -1;
  int col = -1;
};

NonpositiveCheck CheckNonpositive(const Eigen::MatrixXd& A, double tol = 0.0);

struct CertificateSearch {
  bool found = false;
  double h = 0.0;            // H = h (I + 1 1^T)
  Eigen::MatrixXd H;
  Eigen::MatrixXd matrix;    // Lambda or Theta at the returned h
  NonpositiveCheck check;
};

// Shape of the certificate weight for scale h: h (I + 1 1^T).
Eigen::MatrixXd CertificateWeight(int size, double h);

// P = I, Gamma from the given gains, binary search on h up to h_cap.
CertificateSearch SearchLambdaCertificate(CertificateInputs inputs,
                                          const Eigen::MatrixXd& B,
                                          double h_cap = 1e6);
CertificateSearch SearchThetaCertificate(CertificateInputs inputs,
                                         const Eigen::MatrixXd& D,
                                         double h_cap = 1e6);

}  // namespace vvstab
