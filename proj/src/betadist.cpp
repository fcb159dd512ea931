#include "clad/betadist.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "clad/error.hpp"

namespace clad {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

// Continued fraction for I_x(a,b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

void check_unit_interval(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0))
    throw Error(Errc::OutOfDomain, std::string(what) + " must lie in [0, 1], got " +
                                       std::to_string(x));
}

}  // namespace

void validate(const BetaParams& p) {
  if (!(p.a > 0.0) || !(p.b > 0.0) || !std::isfinite(p.a) || !std::isfinite(p.b))
    throw Error(Errc::InvalidShape, "Beta shapes must be positive, got a=" + std::to_string(p.a) +
                                        " b=" + std::to_string(p.b));
}

double log_gamma(double x) {
  if (!(x > 0.0)) throw Error(Errc::OutOfDomain, "log_gamma needs x > 0");
  if (x < 0.5) {
    // reflection: Γ(x)Γ(1-x) = π / sin(πx)
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  x -= 1.0;
  double sum = kLanczosCoef[0];
  for (std::size_t i = 1; i < kLanczosCoef.size(); ++i) sum += kLanczosCoef[i] / (x + double(i));
  const double t = x + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(sum);
}

double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

double beta_pdf(const BetaParams& p, double x) {
  validate(p);
  check_unit_interval(x, "x");
  if (x == 0.0) return p.a < 1.0 ? std::numeric_limits<double>::infinity() : (p.a == 1.0 ? p.b : 0.0);
  if (x == 1.0) return p.b < 1.0 ? std::numeric_limits<double>::infinity() : (p.b == 1.0 ? p.a : 0.0);
  return std::exp((p.a - 1.0) * std::log(x) + (p.b - 1.0) * std::log1p(-x) - log_beta(p.a, p.b));
}

double reg_inc_beta(const BetaParams& p, double x) {
  validate(p);
  check_unit_interval(x, "x");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = p.a * std::log(x) + p.b * std::log1p(-x) - log_beta(p.a, p.b);
  const double front = std::exp(log_front);
  double result;
  if (x < (p.a + 1.0) / (p.a + p.b + 2.0)) {
    result = front * beta_continued_fraction(p.a, p.b, x) / p.a;
  } else {
    result = 1.0 - front * beta_continued_fraction(p.b, p.a, 1.0 - x) / p.b;
  }
  if (result < 0.0) return 0.0;
  if (result > 1.0) return 1.0;
  return result;
}

double beta_quantile(const BetaParams& p, double prob) {
  validate(p);
  if (!(prob > 0.0 && prob < 1.0))
    throw Error(Errc::OutOfDomain, "quantile level must lie in (0, 1), got " +
                                       std::to_string(prob));
  double lo = 0.0;
  double hi = 1.0;
  double x = p.a / (p.a + p.b);
  double best = x;
  double best_err = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 400; ++iter) {
    const double f = reg_inc_beta(p, x) - prob;
    if (std::fabs(f) < best_err) best = x, best_err = std::fabs(f);
    if (best_err <= 1e-15) break;
    if (f < 0.0) lo = x; else hi = x;
    // stop once the bracket holds no double strictly inside it
    if (std::nextafter(lo, 1.0) >= hi) break;
    const double density = beta_pdf(p, x);
    double next = x - f / density;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = lo + 0.5 * (hi - lo);
    if (next <= lo || next >= hi) break;
    x = next;
  }
  return best;
}

}  // namespace clad
