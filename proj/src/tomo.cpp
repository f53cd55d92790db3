#include "poscorr/tomo.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "poscorr/elements.hpp"

namespace poscorr {

namespace {

using Vector16 = Eigen::Matrix<double, 16, 1>;

const std::array<Eigen::Matrix2cd, 4>& paulis() {
  static const std::array<Eigen::Matrix2cd, 4> p = [] {
    std::array<Eigen::Matrix2cd, 4> m;
    const std::complex<double> i(0.0, 1.0);
    m[0] << 1, 0, 0, 1;
    m[1] << 0, 1, 1, 0;
    m[2] << 0, -i, i, 0;
    m[3] << 1, 0, 0, -1;
    return m;
  }();
  return p;
}

Matrix4c<double> setting_projector(const AnalyzerSetting& s) {
  auto arm = [](const ArmAnalyzer& a) -> Eigen::Matrix2cd {
    if (a.open) return Eigen::Matrix2cd::Identity();
    const Eigen::Vector2cd p = a.pass_state();
    return p * p.adjoint();
  };
  return kron<double>(arm(s.signal), arm(s.idler));
}

Matrix4c<double> pauli_product(int k) { return kron<double>(paulis()[k / 4], paulis()[k % 4]); }

struct Dataset {
  std::vector<Matrix4c<double>> projectors;
  std::vector<double> counts;
  std::vector<double> times;
  double total = 0.0;
};

Dataset prepare(std::span<const CountRecord> records) {
  Dataset d;
  for (const auto& r : records) {
    if (r.coincidences < 0.0) throw std::invalid_argument("negative coincidence count");
    if (!(r.integration_s > 0.0)) throw std::invalid_argument("integration time must be positive");
    d.projectors.push_back(setting_projector(r.setting));
    d.counts.push_back(r.coincidences);
    d.times.push_back(r.integration_s);
    d.total += r.coincidences;
  }
  if (!(d.total > 0.0)) throw std::invalid_argument("no coincidences recorded");
  return d;
}

double evaluate(const Vector16& t, const Dataset& d, Vector16* gradient) {
  const Matrix4c<double> tm = lower_triangular(t);
  const Matrix4c<double> m = tm.adjoint() * tm;
  const std::size_t n = d.projectors.size();
  std::vector<double> q(n);
  double sum_q = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    q[k] = d.times[k] * (m * d.projectors[k]).trace().real();
    sum_q += q[k];
  }
  if (!(sum_q > 0.0)) return -std::numeric_limits<double>::infinity();
  double f = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (d.counts[k] == 0.0) continue;
    if (!(q[k] > 0.0)) return -std::numeric_limits<double>::infinity();
    f += d.counts[k] * std::log(q[k] / sum_q);
  }
  f /= d.total;
  if (gradient) {
    Matrix4c<double> g = Matrix4c<double>::Zero();
    for (std::size_t k = 0; k < n; ++k) {
      const double w = (d.counts[k] > 0.0 ? d.counts[k] / q[k] : 0.0) - d.total / sum_q;
      g += (w * d.times[k] / d.total) * d.projectors[k];
    }
    // df = 2 Re Tr(G T† dT)
    const Matrix4c<double> kmat = g * tm.adjoint();
    int p = 0;
    for (int i = 0; i < 4; ++i) (*gradient)(p++) = 2.0 * kmat(i, i).real();
    for (int i = 1; i < 4; ++i) {
      for (int j = 0; j < i; ++j) {
        (*gradient)(p++) = 2.0 * kmat(j, i).real();
        (*gradient)(p++) = -2.0 * kmat(j, i).imag();
      }
    }
  }
  return f;
}

DensityMatrixd from_parameters(const Vector16& t) {
  const Matrix4c<double> tm = lower_triangular(t);
  Matrix4c<double> m = tm.adjoint() * tm;
  m /= m.trace().real();
  return DensityMatrixd::from_matrix(0.5 * (m + m.adjoint()));
}

}  // namespace

Eigen::MatrixXd TomographySettings::design_matrix() const {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(settings.size()), 16);
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const Matrix4c<double> proj = setting_projector(settings[k]);
    for (int c = 0; c < 16; ++c) {
      a(static_cast<Eigen::Index>(k), c) = 0.25 * (pauli_product(c) * proj).trace().real();
    }
  }
  return a;
}

Eigen::Index TomographySettings::rank() const {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design_matrix());
  qr.setThreshold(1e-10);
  return qr.rank();
}

TomographySettings standard_settings(int kind) {
  TomographySettings t;
  if (kind == 16) {
    static constexpr const char* kJames[16] = {"HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
                                               "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL"};
    for (const char* s : kJames) t.settings.push_back(AnalyzerSetting::from_labels(s[0], s[1]));
  } else if (kind == 36) {
    static constexpr char kLabels[6] = {'H', 'V', 'D', 'A', 'R', 'L'};
    for (char s : kLabels)
      for (char i : kLabels) t.settings.push_back(AnalyzerSetting::from_labels(s, i));
  } else {
    throw std::invalid_argument(fmt::format("tomography kind must be 16 or 36, got {}", kind));
  }
  return t;
}

TomographySettings settings_of(std::span<const CountRecord> records) {
  TomographySettings t;
  for (const auto& r : records) t.settings.push_back(r.setting);
  return t;
}

Matrix4c<double> linear_inversion(std::span<const CountRecord> records) {
  const auto settings = settings_of(records);
  const Eigen::MatrixXd a = settings.design_matrix();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 16) {
    throw std::invalid_argument(
        fmt::format("tomography settings are not informationally complete (rank {})", qr.rank()));
  }
  Eigen::VectorXd rates(static_cast<Eigen::Index>(records.size()));
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (!(records[k].integration_s > 0.0)) throw std::invalid_argument("integration time must be positive");
    rates(static_cast<Eigen::Index>(k)) = records[k].coincidences / records[k].integration_s;
  }
  const Eigen::VectorXd r = qr.solve(rates);
  Matrix4c<double> m = Matrix4c<double>::Zero();
  for (int c = 0; c < 16; ++c) m += (0.25 * r(c)) * pauli_product(c);
  const double tr = m.trace().real();
  if (!(tr > 0.0)) throw std::domain_error("linear inversion produced a non-positive trace");
  m /= tr;
  return 0.5 * (m + m.adjoint());
}

DensityMatrixd project_to_physical(const Matrix4c<double>& m) {
  const Matrix4c<double> h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c<double>> eig(h);
  const Eigen::Vector4d clipped = eig.eigenvalues().cwiseMax(0.0);
  if (!(clipped.sum() > 0.0)) throw std::domain_error("no positive spectrum left after clipping");
  Matrix4c<double> p =
      eig.eigenvectors() * (clipped / clipped.sum()).cast<std::complex<double>>().asDiagonal() *
      eig.eigenvectors().adjoint();
  return DensityMatrixd::from_matrix(0.5 * (p + p.adjoint()));
}

Matrix4c<double> lower_triangular(const Vector16& t) {
  Matrix4c<double> m = Matrix4c<double>::Zero();
  int p = 0;
  for (int i = 0; i < 4; ++i) m(i, i) = t(p++);
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      m(i, j) = std::complex<double>(t(p), t(p + 1));
      p += 2;
    }
  }
  return m;
}

Vector16 cholesky_parameters(const DensityMatrixd& rho) {
  // With J the exchange matrix, JρJ = LL† gives ρ = T†T for T = J L† J,
  // which is lower triangular.
  Matrix4c<double> j = Matrix4c<double>::Zero();
  for (int k = 0; k < 4; ++k) j(k, 3 - k) = 1.0;
  const Matrix4c<double> reversed = j * rho.matrix() * j;
  Eigen::LLT<Matrix4c<double>> llt(reversed);
  if (llt.info() != Eigen::Success) throw std::domain_error("state is not positive definite");
  const Matrix4c<double> l = llt.matrixL();
  const Matrix4c<double> t = j * l.adjoint() * j;
  Vector16 out;
  int p = 0;
  for (int i = 0; i < 4; ++i) out(p++) = t(i, i).real();
  for (int i = 1; i < 4; ++i) {
    for (int k = 0; k < i; ++k) {
      out(p++) = t(i, k).real();
      out(p++) = t(i, k).imag();
    }
  }
  return out;
}

double loglik_per_count(const Vector16& t, std::span<const CountRecord> records, Vector16* gradient) {
  return evaluate(t, prepare(records), gradient);
}

double log_likelihood(const DensityMatrixd& rho, std::span<const CountRecord> records) {
  const Dataset d = prepare(records);
  double sum_q = 0.0;
  std::vector<double> q(d.projectors.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    q[k] = d.times[k] * (rho.matrix() * d.projectors[k]).trace().real();
    sum_q += q[k];
  }
  double f = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (d.counts[k] == 0.0) continue;
    if (!(q[k] > 0.0)) return -std::numeric_limits<double>::infinity();
    f += d.counts[k] * std::log(q[k] / sum_q);
  }
  return f;
}

TomographyResult mle_reconstruct(std::span<const CountRecord> records, const BiphotonPure<double>& target,
                                 const MleOptions& options, const DensityMatrixd* init) {
  const Dataset data = prepare(records);
  const DensityMatrixd start = init ? *init : project_to_physical(linear_inversion(records));
  const DensityMatrixd seeded = blend(start, DensityMatrixd{}, options.init_mixing);

  Vector16 x = cholesky_parameters(seeded);
  Vector16 g;
  double f = evaluate(x, data, &g);
  if (!std::isfinite(f)) throw std::domain_error("initial state assigns zero probability to observed counts");

  TomographyResult result;
  result.loglik_history.push_back(f);

  // Quasi-Newton ascent (BFGS on −f) with Armijo backtracking.
  Eigen::Matrix<double, 16, 16> h = Eigen::Matrix<double, 16, 16>::Identity();
  int iter = 0;
  bool converged = g.norm() < options.tolerance_gradient;
  while (!converged && iter < options.max_iterations) {
    Vector16 dir = h * g;
    if (dir.dot(g) <= 0.0) {
      h.setIdentity();
      dir = g;
    }
    double step = 1.0;
    Vector16 x_new;
    Vector16 g_new;
    double f_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      x_new = x + step * dir;
      f_new = evaluate(x_new, data, &g_new);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * step * dir.dot(g) && f_new > f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!h.isIdentity()) {
        h.setIdentity();
        continue;
      }
      // No ascent direction left at working precision.
      converged = g.norm() < 1e3 * options.tolerance_gradient;
      break;
    }
    ++iter;
    const Vector16 s = x_new - x;
    const Vector16 y = g - g_new;  // gradient change of −f
    const double improvement = f_new - f;
    x = x_new;
    f = f_new;
    g = g_new;
    result.loglik_history.push_back(f);

    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (iter == 1) h *= sy / y.squaredNorm();
      const double rho_k = 1.0 / sy;
      const Eigen::Matrix<double, 16, 16> v = Eigen::Matrix<double, 16, 16>::Identity() - rho_k * s * y.transpose();
      h = v * h * v.transpose() + rho_k * s * s.transpose();
    }
    converged = improvement < options.tolerance_loglik || g.norm() < options.tolerance_gradient;
  }

  result.rho_est = from_parameters(x);
  result.iterations = iter;
  result.converged = converged;
  result.log_likelihood = f * data.total;
  result.fidelity_to_target = fidelity(result.rho_est, target);
  result.purity = purity(result.rho_est);
  result.concurrence = concurrence(result.rho_est);
  return result;
}

TomographyReport tomography_report(const TomographyResult& result, Bell target) {
  TomographyReport r;
  r.real = result.rho_est.matrix().real();
  r.imag = result.rho_est.matrix().imag();
  r.fidelity = fidelity(result.rho_est, bell_state<double>(target));
  r.purity = result.purity;
  r.concurrence = result.concurrence;
  r.log_likelihood = result.log_likelihood;
  r.iterations = result.iterations;
  r.converged = result.converged;
  r.target = target;
  const auto angles = analyzer_angles(10.0);
  r.visibility_hv = visibility(correlation_scan(result.rho_est, 0.0, angles));
  r.visibility_da = visibility(correlation_scan(result.rho_est, 45.0, angles));
  const double v = 0.5 * (r.visibility_hv + r.visibility_da);
  r.fidelity_estimate_werner = (1.0 + 3.0 * v) / 4.0;
  r.fidelity_estimate_linear = (1.0 + v) / 2.0;
  return r;
}

DensityMatrixd random_density_matrix(std::uint64_t seed, int rank) {
  if (rank < 1 || rank > 4) throw std::invalid_argument("rank must lie in [1, 4]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd g(4, rank);
  for (Eigen::Index r = 0; r < 4; ++r)
    for (Eigen::Index c = 0; c < rank; ++c) g(r, c) = {normal(rng), normal(rng)};
  Matrix4c<double> m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrixd::from_matrix(0.5 * (m + m.adjoint()));
}

}  // namespace poscorr
