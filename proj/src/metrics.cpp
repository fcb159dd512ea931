#include "clad/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "clad/error.hpp"

namespace clad {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

MetricsReport score(const std::vector<Label>& predictions, const std::vector<Label>& truth) {
  if (predictions.size() != truth.size())
    throw Error(Errc::LengthMismatch, "predictions (" + std::to_string(predictions.size()) +
                                          ") and truth (" + std::to_string(truth.size()) +
                                          ") differ in length");
  MetricsReport r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool pred = predictions[i] == Label::Target;
    const bool real = truth[i] == Label::Target;
    if (pred && real) ++r.tp;
    else if (pred) ++r.fp;
    else if (real) ++r.fn;
    else ++r.tn;
  }
  const long n = r.total();
  r.accuracy = n > 0 ? double(r.tp + r.tn) / double(n) : 0.0;

  if (r.tp + r.fp > 0) r.precision = double(r.tp) / double(r.tp + r.fp);
  else r.precision_degenerate = true;

  if (r.tp + r.fn > 0) r.recall = double(r.tp) / double(r.tp + r.fn);
  else r.recall_degenerate = true;

  if (r.precision + r.recall > 0.0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  else r.f1_degenerate = true;

  if (r.fp + r.tn > 0) r.fpr = double(r.fp) / double(r.fp + r.tn);
  else r.fpr_degenerate = true;
  return r;
}

double roc_auc(const Eigen::VectorXd& scores, const std::vector<Label>& truth) {
  if (static_cast<std::size_t>(scores.size()) != truth.size())
    throw Error(Errc::LengthMismatch, "scores and labels differ in length");
  const std::size_t n = truth.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] < scores[static_cast<Eigen::Index>(b)];
  });

  // midranks are half-integers, so the rank sum is exact in double
  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[static_cast<Eigen::Index>(order[j])] ==
                        scores[static_cast<Eigen::Index>(order[i])])
      ++j;
    const double midrank = 0.5 * double(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (truth[order[k]] == Label::Target) {
        rank_sum += midrank;
        n_pos += 1.0;
      }
    i = j;
  }
  const double n_neg = double(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0)
    throw Error(Errc::SingleClass, "AUC needs both classes present");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

std::string MetricsReport::to_text() const {
  std::string s;
  auto line = [&](const char* key, const std::string& value) {
    s += key;
    s += '=';
    s += value;
    s += '\n';
  };
  line("tp", std::to_string(tp));
  line("fp", std::to_string(fp));
  line("tn", std::to_string(tn));
  line("fn", std::to_string(fn));
  line("accuracy", fmt_double(accuracy));
  line("precision", fmt_double(precision));
  line("recall", fmt_double(recall));
  line("f1", fmt_double(f1));
  line("fpr", fmt_double(fpr));
  if (has_auc) line("auc", fmt_double(auc));
  line("precision_degenerate", precision_degenerate ? "1" : "0");
  line("recall_degenerate", recall_degenerate ? "1" : "0");
  line("f1_degenerate", f1_degenerate ? "1" : "0");
  line("fpr_degenerate", fpr_degenerate ? "1" : "0");
  return s;
}

}  // namespace clad
