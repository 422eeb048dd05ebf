#include "vvstab/stability.h"

#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Eigenvalues>

#include "vvstab/errors.h"

namespace vvstab {

namespace {

constexpr double kPowerTol = 1e-10;
constexpr int kPowerMaxIter = 10000;

void RequireShape(const Eigen::MatrixXd& m, Eigen::Index rows,
                  Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw CertificateInputError(
        std::string(name) + " has shape " + std::to_string(m.rows()) + "x" +
        std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
        std::to_string(cols));
  }
}

void RequireBaseShapes(const CertificateInputs& in) {
  const int n = in.n();
  RequireShape(in.Z, n, 2 * n, "Z");
  RequireShape(in.C_s, 2 * n, n, "C_s");
  if (in.T.size() != 2 * n) throw CertificateInputError("T must have 2n entries");
  if ((in.T.array() <= 0.0).any()) {
    throw CertificateInputError("T must be positive definite");
  }
}

void RequirePlacement(const Eigen::MatrixXd& B, const char* name) {
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
      if (B(i, j) != 0.0 && B(i, j) != 1.0) {
        throw CertificateInputError(std::string(name) +
                                    " must have 0/1 entries");
      }
    }
  }
  if ((B.rowwise().sum().array() > 1.0).any() ||
      (B.colwise().sum().array() > 1.0).any()) {
    throw CertificateInputError(std::string(name) +
                                " has more than one 1 in a row or column");
  }
}

// P Z T^-1 C_s, the n x n block shared by both certificates.
Eigen::MatrixXd CouplingTerm(const CertificateInputs& in) {
  Eigen::MatrixXd P = in.P.size() == 0
                          ? Eigen::MatrixXd::Identity(in.n(), in.n())
                          : in.P;
  RequireShape(P, in.n(), in.n(), "P");
  return P * in.Z * in.T.cwiseInverse().asDiagonal() * in.C_s;
}

CertificateSearch Search(
    const std::function<Eigen::MatrixXd(double)>& build, double h_cap) {
  CertificateSearch result;
  auto passes = [&](double h) { return CheckNonpositive(build(h)).ok; };
  if (!passes(h_cap)) {
    result.h = h_cap;
    result.matrix = build(h_cap);
    result.check = CheckNonpositive(result.matrix);
    return result;
  }
  double lo = 0.0;
  double hi = h_cap;
  if (passes(lo)) {
    hi = lo;
  } else {
    for (int k = 0; k < 200 && hi - lo > 1e-12 * hi; ++k) {
      const double mid = 0.5 * (lo + hi);
      (passes(mid) ? hi : lo) = mid;
    }
  }
  result.found = true;
  result.h = hi;
  result.matrix = build(hi);
  result.check = CheckNonpositive(result.matrix);
  return result;
}

}  // namespace

double SpectralNorm(const Eigen::MatrixXd& A) {
  if (!A.allFinite()) throw std::invalid_argument("matrix has non-finite entries");
  if (A.size() == 0 || A.isZero(0.0)) return 0.0;
  const Eigen::MatrixXd AtA = A.transpose() * A;
  const Eigen::Index n = AtA.cols();
  // Deterministic start with unequal entries so it is not orthogonal to the
  // dominant singular vector for structured inputs.
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.5 * std::sin(1.0 + i);
  x.normalize();
  double lambda = x.dot(AtA * x);
  double prev_delta = -1.0;
  for (int iter = 1; iter <= kPowerMaxIter; ++iter) {
    Eigen::VectorXd y = AtA * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
    const double next = x.dot(AtA * x);
    const double delta = std::abs(next - lambda);
    const double scale = std::abs(next);
    // The Rayleigh quotient converges geometrically with ratio rho, so the
    // remaining error is about delta rho / (1 - rho); a small step alone is
    // not enough when the top two singular values are close.
    if (delta <= 1e-15 * scale) return std::sqrt(next);
    if (delta <= kPowerTol * scale && prev_delta > 0.0) {
      const double rho = delta / prev_delta;
      if (rho < 1.0 && delta * rho / (1.0 - rho) <= kPowerTol * scale) {
        return std::sqrt(next);
      }
    }
    prev_delta = delta;
    lambda = next;
  }
  throw NumericalError("power iteration did not converge", kPowerMaxIter);
}

Eigen::MatrixXd StackLipschitz(const Eigen::VectorXd& c_p,
                               const Eigen::VectorXd& c_q) {
  const Eigen::Index n = c_p.size();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * n, n);
  C.topRows(n).diagonal() = c_p;
  C.bottomRows(n).diagonal() = c_q;
  return C;
}

StabilityReport CheckSigmaBound(const CertificateInputs& inputs) {
  RequireBaseShapes(inputs);
  const int n = inputs.n();
  StabilityReport report;
  report.sigma = SpectralNorm(inputs.C_s * inputs.Z);
  if (inputs.M.size() == 0) {
    // M = T gives M T^-1 = I.
    report.lambda_min = report.lambda_max = 1.0;
  } else {
    RequireShape(inputs.M, 2 * n, 2 * n, "M");
    if (!inputs.M.isApprox(inputs.M.transpose(), 1e-12)) {
      throw CertificateInputError("M must be symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(inputs.M);
    if (llt.info() != Eigen::Success) {
      throw CertificateInputError("M must be positive definite");
    }
    const Eigen::VectorXd t_inv_sqrt = inputs.T.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd S =
        t_inv_sqrt.asDiagonal() * inputs.M * t_inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        S, Eigen::EigenvaluesOnly);
    report.lambda_min = eig.eigenvalues().minCoeff();
    report.lambda_max = eig.eigenvalues().maxCoeff();
  }
  report.margin = -report.lambda_min + report.lambda_max * report.sigma;
  report.satisfied = report.margin <= 0.0;
  return report;
}

Eigen::MatrixXd BuildLambda(const CertificateInputs& inputs,
                            const Eigen::MatrixXd& B) {
  RequireBaseShapes(inputs);
  const int n = inputs.n();
  if (B.rows() != 2 * n) throw CertificateInputError("B must have 2n rows");
  RequirePlacement(B, "B");
  const Eigen::Index k = B.cols();
  RequireShape(inputs.Gamma, k, k, "Gamma");
  RequireShape(inputs.H, k, k, "H");
  const Eigen::MatrixXd IhatT_B = B.topRows(n) + B.bottomRows(n);
  return CouplingTerm(inputs) * IhatT_B - IhatT_B * inputs.Gamma * inputs.H;
}

Eigen::MatrixXd BuildTheta(const CertificateInputs& inputs,
                           const Eigen::MatrixXd& D) {
  RequireBaseShapes(inputs);
  const int n = inputs.n();
  if (D.rows() != n) throw CertificateInputError("D must have n rows");
  RequirePlacement(D, "D");
  const Eigen::Index l = D.cols();
  RequireShape(inputs.Gamma, l, l, "Gamma_v");
  RequireShape(inputs.H, l, l, "H");
  return CouplingTerm(inputs) * D - D * inputs.Gamma * inputs.H;
}

NonpositiveCheck CheckNonpositive(const Eigen::MatrixXd& A, double tol) {
  NonpositiveCheck out;
  if (A.size() == 0) return out;
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  out.worst = A.maxCoeff(&r, &c);
  out.row = static_cast<int>(r);
  out.col = static_cast<int>(c);
  out.ok = out.worst <= tol;
  return out;
}

Eigen::MatrixXd CertificateWeight(int size, double h) {
  return h * (Eigen::MatrixXd::Identity(size, size) +
              Eigen::MatrixXd::Ones(size, size));
}

CertificateSearch SearchLambdaCertificate(CertificateInputs inputs,
                                          const Eigen::MatrixXd& B,
                                          double h_cap) {
  inputs.P = Eigen::MatrixXd::Identity(inputs.n(), inputs.n());
  const int k = static_cast<int>(B.cols());
  auto result = Search(
      [&](double h) {
        inputs.H = CertificateWeight(k, h);
        return BuildLambda(inputs, B);
      },
      h_cap);
  result.H = CertificateWeight(k, result.h);
  return result;
}

CertificateSearch SearchThetaCertificate(CertificateInputs inputs,
                                         const Eigen::MatrixXd& D,
                                         double h_cap) {
  inputs.P = Eigen::MatrixXd::Identity(inputs.n(), inputs.n());
  const int l = static_cast<int>(D.cols());
  auto result = Search(
      [&](double h) {
        inputs.H = CertificateWeight(l, h);
        return BuildTheta(inputs, D);
      },
      h_cap);
  result.H = CertificateWeight(l, result.h);
  return result;
}

}  // namespace vvstab
