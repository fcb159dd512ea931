#ifndef CLAD_BETADIST_HPP
#define CLAD_BETADIST_HPP

namespace clad {

/// Shapes of a Beta distribution; both strictly positive.
struct BetaParams {
  double a = 1.0;
  double b = 1.0;

  friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

/// Throws InvalidShape unless a > 0 and b > 0 (and both finite).
void validate(const BetaParams& p);

/// ln Γ(x) for x > 0, Lanczos approximation (g = 7, 9 terms).
double log_gamma(double x);

/// ln B(a, b)
double log_beta(double a, double b);

/// Beta density at x in [0, 1].
double beta_pdf(const BetaParams& p, double x);

/// Regularized incomplete Beta function I_x(a, b), i.e. the Beta CDF.
/// Continued fraction (modified Lentz) on whichever side of the mode converges
/// fastest, using I_x(a,b) = 1 - I_{1-x}(b,a) for the other side.
double reg_inc_beta(const BetaParams& p, double x);

/// Inverse of reg_inc_beta in x for prob in (0, 1). Newton steps kept inside a
/// bisection bracket, so it converges for every valid shape.
double beta_quantile(const BetaParams& p, double prob);

}  // namespace clad

#endif  // CLAD_BETADIST_HPP
