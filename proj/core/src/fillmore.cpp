#include "projdecomp/fillmore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "projdecomp/error.hpp"

namespace projdecomp {

namespace {

nlohmann::json report_json(const FillmoreReport& r) {
  nlohmann::json j{{"trace", r.trace}, {"rank", r.rank}, {"verdict", r.verdict}};
  j["m"] = r.m ? nlohmann::json(*r.m) : nlohmann::json(nullptr);
  return j;
}

int count_positive(const SpectralDecomposition& sd, double cut) {
  return static_cast<int>(
      std::count_if(sd.eigenvalues.begin(), sd.eigenvalues.end(), [cut](double x) { return x > cut; }));
}

}  // namespace

double residual_bound(const FiniteMatrixCert& cert, const TolerancePolicy& tol) {
  const double tr = cert.target.trace();
  const double drift = std::abs(tr - static_cast<double>(cert.projections.size()));
  return tol.proj_tol * (1.0 + cert.target.frobenius_norm()) + drift;
}

std::string audit_cert(const FiniteMatrixCert& cert, const TolerancePolicy& tol) {
  const std::size_t n = cert.target.dim();
  Matrix sum(n, n);
  for (std::size_t k = 0; k < cert.projections.size(); ++k) {
    const auto& p = cert.projections[k];
    if (p.dim() != n) return "projection " + std::to_string(k) + " has wrong dimension";
    const double idem = p.idempotency_residual();
    if (!(idem <= tol.proj_tol)) return "projection " + std::to_string(k) + " is not idempotent";
    sum += p.matrix();
  }
  const double res = frobenius_distance(sum, cert.target.matrix());
  if (!(res <= residual_bound(cert, tol))) return "sum residual " + std::to_string(res) + " exceeds bound";
  if (std::abs(res - cert.residual) > tol.proj_tol * (1.0 + cert.target.frobenius_norm())) {
    return "stored residual does not match recomputed residual";
  }
  return {};
}

FillmoreReport fillmore_check(const HermitianMatrix& a, const TolerancePolicy& tol) {
  const auto sd = eigh(a, tol);
  require_psd(sd, tol);
  FillmoreReport r;
  r.trace = a.trace();
  r.rank = count_positive(sd, tol.rank_tol);
  const double rounded = std::round(r.trace);
  if (std::abs(r.trace - rounded) <= tol.rank_tol * std::max(1.0, r.trace) && rounded >= r.rank) {
    r.m = static_cast<long long>(rounded);
    r.verdict = true;
  }
  return r;
}

std::vector<std::vector<double>> schur_horn_frame(const std::vector<double>& lambdas, long long m,
                                                  const TolerancePolicy& tol) {
  const std::size_t n = lambdas.size();
  if (m < 0 || static_cast<std::size_t>(m) < n) {
    throw Error(ErrorCode::BadTrace, "frame size m must be at least the number of eigenvalues");
  }
  for (double x : lambdas) {
    if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "frame eigenvalues must be positive");
  }
  const double total = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
  const double md = static_cast<double>(m);
  if (std::abs(total - md) > tol.rank_tol * std::max(1.0, md)) {
    throw Error(ErrorCode::BadTrace, "eigenvalue sum " + std::to_string(total) + " differs from m");
  }
  if (m == 0) return {};
  const std::size_t mm = static_cast<std::size_t>(m);

  std::vector<double> mu(mm, 0.0);
  for (std::size_t i = 0; i < n; ++i) mu[i] = lambdas[i] * (md / total);

  std::vector<double> sorted = mu;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double partial = 0.0;
  for (std::size_t k = 0; k < mm; ++k) {
    partial += sorted[k];
    if (partial < static_cast<double>(k + 1) * (1.0 - 1e-12)) {
      throw Error(ErrorCode::MajorizationFailure, "(1,…,1) is not majorized by the padded spectrum");
    }
  }

  // Real symmetric Gram matrix G = Wᵀ diag(mu) W, driven to unit diagonal.
  std::vector<double> g(mm * mm, 0.0);
  std::vector<double> w(mm * mm, 0.0);
  for (std::size_t i = 0; i < mm; ++i) {
    g[i * mm + i] = mu[i];
    w[i * mm + i] = 1.0;
  }
  auto G = [&](std::size_t i, std::size_t j) -> double& { return g[i * mm + j]; };
  auto W = [&](std::size_t i, std::size_t j) -> double& { return w[i * mm + j]; };
  const double eps = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, md);

  for (std::size_t step = 0; step < mm; ++step) {
    std::size_t i = mm, j = mm;
    for (std::size_t k = 0; k < mm; ++k) {
      if (i == mm && G(k, k) > 1.0 + eps) i = k;
      if (j == mm && G(k, k) < 1.0 - eps) j = k;
    }
    if (i == mm || j == mm) break;
    const double x = G(i, i);
    const double z = G(j, j);
    const double y = G(i, j);
    const double disc = y * y - (z - 1.0) * (x - 1.0);
    const double q = y + std::copysign(std::sqrt(disc), y == 0.0 ? 1.0 : y);
    const double t = (x - 1.0) / q;
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    for (std::size_t k = 0; k < mm; ++k) {
      const double gki = G(k, i), gkj = G(k, j);
      G(k, i) = c * gki - s * gkj;
      G(k, j) = s * gki + c * gkj;
    }
    for (std::size_t k = 0; k < mm; ++k) {
      const double gik = G(i, k), gjk = G(j, k);
      G(i, k) = c * gik - s * gjk;
      G(j, k) = s * gik + c * gjk;
    }
    G(i, i) = 1.0;
    for (std::size_t k = 0; k < mm; ++k) {
      const double wki = W(k, i), wkj = W(k, j);
      W(k, i) = c * wki - s * wkj;
      W(k, j) = s * wki + c * wkj;
    }
  }
  for (std::size_t k = 0; k < mm; ++k) {
    if (std::abs(G(k, k) - 1.0) > 1e-9) {
      throw Error(ErrorCode::MajorizationFailure, "rotation chain did not reach a unit diagonal");
    }
  }

  std::vector<std::vector<double>> frame(mm, std::vector<double>(n));
  for (std::size_t k = 0; k < mm; ++k) {
    double norm2 = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      frame[k][r] = std::sqrt(mu[r]) * W(r, k);
      norm2 += frame[k][r] * frame[k][r];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : frame[k]) x *= inv;
  }
  return frame;
}

FiniteMatrixCert fillmore_decompose(const HermitianMatrix& a, const TolerancePolicy& tol) {
  const auto report = fillmore_check(a, tol);
  if (!report.verdict) {
    throw Error(ErrorCode::CriterionFailed, "operator is not a finite sum of projections", report_json(report));
  }
  const auto sd = eigh(a, tol);
  std::vector<std::size_t> pos;
  std::vector<double> lambdas;
  for (std::size_t c = 0; c < sd.eigenvalues.size(); ++c) {
    if (sd.eigenvalues[c] > tol.rank_tol) {
      pos.push_back(c);
      lambdas.push_back(sd.eigenvalues[c]);
    }
  }
  const auto frame = schur_horn_frame(lambdas, *report.m, tol);
  const std::size_t dim = a.dim();
  FiniteMatrixCert cert;
  cert.target = a;
  cert.projections.reserve(frame.size());
  Matrix sum(dim, dim);
  for (const auto& vk : frame) {
    std::vector<Complex> wvec(dim, 0.0);
    for (std::size_t r = 0; r < pos.size(); ++r) {
      if (vk[r] == 0.0) continue;
      for (std::size_t i = 0; i < dim; ++i) wvec[i] += vk[r] * sd.eigenvectors(i, pos[r]);
    }
    double norm2 = 0.0;
    for (const auto& z : wvec) norm2 += std::norm(z);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& z : wvec) z *= inv;
    cert.projections.emplace_back(make_hermitian_unchecked(outer(wvec, wvec)), tol);
    sum += cert.projections.back().matrix();
  }
  cert.residual = frobenius_distance(sum, a.matrix());
  return cert;
}

GadgetResult two_projection_gadget(const HermitianMatrix& b, const Matrix& v, const TolerancePolicy& tol) {
  const std::size_t dim = b.dim();
  if (v.rows() != dim || v.cols() != dim) throw Error(ErrorCode::BadIsometry, "isometry has wrong shape");
  const Matrix e = v.adjoint() * v;
  const Matrix fp = v * v.adjoint();
  const double scale = std::max(1.0, e.frobenius_norm());
  if (frobenius_distance(e * e, e) > tol.proj_tol * scale) {
    throw Error(ErrorCode::BadIsometry, "v is not a partial isometry");
  }
  if ((e * fp).frobenius_norm() > tol.proj_tol * scale) {
    throw Error(ErrorCode::BadIsometry, "range of v is not orthogonal to its support");
  }
  const auto sd = eigh(b, tol);
  require_psd(sd, tol);
  const double nb = sd.eigenvalues.empty() ? 0.0 : sd.eigenvalues.back();
  if (!(nb > tol.rank_tol)) throw Error(ErrorCode::ZeroB, "gadget requires b ≠ 0");
  if (frobenius_distance(e * b.matrix(), b.matrix()) > tol.proj_tol * std::max(1.0, b.frobenius_norm())) {
    throw Error(ErrorCode::BadIsometry, "b is not supported on v*v");
  }
  auto unit = [nb](double x) { return std::clamp(x / nb, 0.0, 1.0); };
  const Matrix bn = apply_function(sd, [&](double x) { return unit(x); }).matrix();
  const Matrix x = apply_function(sd, [&](double t) {
                     const double u = unit(t);
                     return std::sqrt(std::max(0.0, u - u * u));
                   }).matrix();
  const Matrix vt = v.adjoint();
  const Matrix diag_part = bn + v * (e - bn) * vt;
  const Matrix off = v * x + x * vt;
  GadgetResult out{ProjectionMatrix(make_hermitian_unchecked(diag_part - off), tol),
                   ProjectionMatrix(make_hermitian_unchecked(diag_part + off), tol),
                   make_hermitian_unchecked(fp * Complex(nb) - v * bn * vt * Complex(nb)), nb};
  return out;
}

SignedCombination spectral_backend(const HermitianMatrix& b, const TolerancePolicy& tol) {
  SignedCombination out;
  if (b.dim() == 0) return out;
  const auto sd = eigh(b, tol);
  const double nb = std::max(std::abs(sd.eigenvalues.front()), std::abs(sd.eigenvalues.back()));
  const double cluster = tol.rank_tol * std::max(1.0, nb);
  std::size_t start = 0;
  const std::size_t n = sd.eigenvalues.size();
  while (start < n) {
    std::size_t stop = start + 1;
    while (stop < n && sd.eigenvalues[stop] - sd.eigenvalues[stop - 1] <= cluster) ++stop;
    double mean = 0.0;
    for (std::size_t c = start; c < stop; ++c) mean += sd.eigenvalues[c];
    mean /= static_cast<double>(stop - start);
    if (std::abs(mean) > cluster) {
      Matrix cols(n, stop - start);
      for (std::size_t c = start; c < stop; ++c)
        for (std::size_t i = 0; i < n; ++i) cols(i, c - start) = sd.eigenvectors(i, c);
      out.coefficients.push_back(mean);
      out.projections.push_back(ProjectionMatrix::onto_columns(cols, tol));
    }
    start = stop;
  }
  return out;
}

CombinationBackend default_backend(std::size_t dim) {
  const int d = static_cast<int>(std::max<std::size_t>(dim, 1));
  return {{d, static_cast<double>(d)}, [](const HermitianMatrix& b, const TolerancePolicy& t) {
            return spectral_backend(b, t);
          }};
}

PositiveCombination positive_combination_invertible(const HermitianMatrix& a, std::optional<double> nu,
                                                    const std::optional<CombinationBackend>& backend,
                                                    const TolerancePolicy& tol) {
  const auto sd = eigh(a, tol);
  require_psd(sd, tol);
  const std::size_t dim = a.dim();
  std::vector<std::size_t> pos;
  for (std::size_t c = 0; c < sd.eigenvalues.size(); ++c)
    if (sd.eigenvalues[c] > tol.rank_tol) pos.push_back(c);

  PositiveCombination out;
  out.target = a;
  if (pos.empty()) {
    out.residual = a.frobenius_norm();
    return out;
  }
  const std::size_t r = pos.size();
  const double lo = sd.eigenvalues[pos.front()];
  const double norm = sd.eigenvalues[pos.back()];
  const double v = nu.value_or(lo);
  if (!(v > 0.0) || lo < v - tol.rank_tol * std::max(1.0, v)) {
    throw Error(ErrorCode::NotLocallyInvertible, "operator is not bounded below by ν on its range");
  }
  const CombinationBackend be = backend.value_or(default_backend(r));
  if (be.constants.N0 < 1 || be.constants.V0 < 1.0) {
    throw Error(ErrorCode::InvalidArgument, "backend constants must satisfy N0 ≥ 1, V0 ≥ 1");
  }

  Matrix basis(dim, r);
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t i = 0; i < dim; ++i) basis(i, k) = sd.eigenvectors(i, pos[k]);
  const Matrix basis_t = basis.adjoint();
  auto lift = [&](const Matrix& m) { return make_hermitian_unchecked(basis * m * basis_t); };
  const HermitianMatrix range = lift(Matrix::identity(r));

  const double x = be.constants.V0 * (norm / v - 1.0);
  const long long n = std::max(0LL, static_cast<long long>(std::ceil(x - 1e-9 * std::max(1.0, x))));
  out.count_bound = be.constants.N0 + n + 1;

  if (n == 0) {
    out.coefficients.push_back(v);
    out.projections.emplace_back(range, tol);
    out.residual = frobenius_distance((v * range).matrix(), a.matrix());
    return out;
  }

  // Spectral partition of [ν, ‖a‖] into n subintervals with right endpoints λ_k.
  const double h = (norm - v) / static_cast<double>(n);
  std::vector<std::vector<std::size_t>> parts(static_cast<std::size_t>(n));
  Matrix b(r, r);
  for (std::size_t k = 0; k < r; ++k) {
    const double ev = sd.eigenvalues[pos[k]];
    long long idx = h > 0.0 ? static_cast<long long>(std::ceil((ev - v) / h - tol.rank_tol)) : 1;
    idx = std::clamp(idx, 1LL, n);
    parts[static_cast<std::size_t>(idx - 1)].push_back(k);
    b(k, k) = ev - (v + static_cast<double>(idx) * h);
  }
  const auto b_red = make_hermitian_unchecked(b);
  const double norm_b = b_red.dim() == 0 ? 0.0 : operator_norm(b_red, tol);
  const SignedCombination sc = be.decompose(b_red, tol);
  if (sc.coefficients.size() != sc.projections.size()) {
    throw Error(ErrorCode::BackendContractViolated, "backend returned mismatched lists");
  }
  double abs_sum = 0.0, neg_sum = 0.0;
  Matrix replay(r, r);
  for (std::size_t i = 0; i < sc.coefficients.size(); ++i) {
    if (sc.projections[i].dim() != r) throw Error(ErrorCode::BackendContractViolated, "backend projection has wrong dimension");
    abs_sum += std::abs(sc.coefficients[i]);
    if (sc.coefficients[i] < 0.0) neg_sum += -sc.coefficients[i];
    replay += sc.projections[i].matrix() * Complex(sc.coefficients[i]);
  }
  const double slack = tol.rank_tol * std::max(1.0, norm);
  if (static_cast<long long>(sc.coefficients.size()) > be.constants.N0 ||
      abs_sum > be.constants.V0 * norm_b + slack || frobenius_distance(replay, b) > slack) {
    throw Error(ErrorCode::BackendContractViolated, "backend combination violates its declared constants");
  }

  auto push = [&](double c, const HermitianMatrix& p) {
    if (c <= slack * 1e-6) return;
    out.coefficients.push_back(c);
    out.projections.emplace_back(p, tol);
  };
  for (long long k = 1; k <= n; ++k) {
    const auto& members = parts[static_cast<std::size_t>(k - 1)];
    if (members.empty()) continue;
    Matrix e(r, r);
    for (std::size_t m : members) e(m, m) = 1.0;
    push(static_cast<double>(k) * h, lift(e));
  }
  for (std::size_t i = 0; i < sc.coefficients.size(); ++i) {
    const double c = sc.coefficients[i];
    if (c >= 0.0) {
      push(c, lift(sc.projections[i].matrix()));
    } else {
      push(-c, lift(Matrix::identity(r) - sc.projections[i].matrix()));
    }
  }
  push(v - neg_sum, range);

  Matrix sum(dim, dim);
  for (std::size_t i = 0; i < out.coefficients.size(); ++i) sum += out.projections[i].matrix() * Complex(out.coefficients[i]);
  out.residual = frobenius_distance(sum, a.matrix());
  return out;
}

RankAudit rank_audit(const HermitianMatrix& a, const std::vector<double>& coefficients,
                     const std::vector<ProjectionMatrix>& projections, const TolerancePolicy& tol) {
  RankAudit audit;
  if (coefficients.empty()) return audit;
  audit.delta = *std::min_element(coefficients.begin(), coefficients.end());
  const auto sd = eigh(a, tol);
  const double rt = tol.rank_tol;
  for (double x : sd.eigenvalues) {
    if (x <= rt) continue;
    ++audit.rank_range;
    if (x < audit.delta - rt) {
      ++audit.rank_below_delta;
    } else {
      ++audit.rank_above_delta;
    }
  }
  for (std::size_t j = 0; j < projections.size(); ++j) {
    const int rk = projections[j].nominal_rank();
    audit.ranks.push_back(rk);
    if (audit.ok && audit.rank_below_delta > audit.rank_range - rk) {
      audit.ok = false;
      audit.failure = "rank χ_a(0,δ) exceeds rank(R_a − p_" + std::to_string(j) + ")";
    }
    if (audit.ok && rk > audit.rank_above_delta) {
      audit.ok = false;
      audit.failure = "rank p_" + std::to_string(j) + " exceeds rank χ_a[δ,∞)";
    }
  }
  return audit;
}

}  // namespace projdecomp
