#include <cmath>
#include <ostream>

#include "apx/experiment.hpp"

namespace apx {

void emit_plot_data(std::ostream& os, std::span<const std::pair<std::size_t, double>> pts, const RateReport& r) {
  auto in_window = [&](std::size_t N) {
    auto x = static_cast<double>(N);
    return x >= r.N_lo * (1 - 1e-12) && x <= r.N_hi * (1 + 1e-12) && r.points > 0;
  };
  // the least-squares line passes through the window centroid
  double mx = 0, my = 0;
  int n = 0;
  for (auto [N, E] : pts)
    if (in_window(N) && E > 0) mx += std::log2(static_cast<double>(N)), my += std::log2(E), ++n;
  if (n > 0) mx /= n, my /= n;
  os << "N,error,log2_N,log2_error,fit_log2_error,in_window,slope\n";
  for (auto [N, E] : pts) {
    double lx = std::log2(static_cast<double>(N));
    os << N << ',' << format_double(E) << ',' << format_double(lx) << ',' << format_double(std::log2(E)) << ','
       << format_double(my - r.s * (lx - mx)) << ',' << (in_window(N) ? 1 : 0) << ',' << format_double(-r.s) << '\n';
  }
}

void emit_plot_data(std::ostream& os, const BudgetCurve& c, const RateReport& r) {
  emit_plot_data(os, std::span<const std::pair<std::size_t, double>>(c.envelope), r);
}

}  // namespace apx
