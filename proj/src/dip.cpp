// Dip statistic via the greatest convex minorant / least concave majorant
// cycling of Hartigan's AS 217, with the later index and sign corrections.
// Works in units of 2n * dip until the final division.

#include <vector>

#include "modetest/error.hpp"
#include "modetest/excess_mass.hpp"

namespace modetest {

double dip_statistic(const SortedSample& sample) {
  sample.require_size(2, "dip statistic");
  sample.require_distinct("dip statistic");
  const int n = static_cast<int>(sample.size());
  // One-based copy, as in the reference algorithm.
  std::vector<double> x(n + 1);
  for (int i = 1; i <= n; ++i) x[i] = sample[static_cast<std::size_t>(i - 1)];

  std::vector<int> mn(n + 1), mj(n + 1), gcm(n + 2), lcm(n + 2);
  double dip = 1.0;

  mn[1] = 1;
  for (int j = 2; j <= n; ++j) {
    mn[j] = j - 1;
    for (;;) {
      const int mnj = mn[j];
      const int mnmnj = mn[mnj];
      if (mnj == 1 || (x[j] - x[mnj]) * (mnj - mnmnj) < (x[mnj] - x[mnmnj]) * (j - mnj)) break;
      mn[j] = mnmnj;
    }
  }
  mj[n] = n;
  for (int k = n - 1; k >= 1; --k) {
    mj[k] = k + 1;
    for (;;) {
      const int mjk = mj[k];
      const int mjmjk = mj[mjk];
      if (mjk == n || (x[k] - x[mjk]) * (mjk - mjmjk) < (x[mjk] - x[mjmjk]) * (k - mjk)) break;
      mj[k] = mjmjk;
    }
  }

  int low = 1;
  int high = n;
  for (;;) {
    gcm[1] = high;
    int i = 1;
    for (; gcm[i] > low; ++i) gcm[i + 1] = mn[gcm[i]];
    const int l_gcm = i;
    int ig = l_gcm;
    int ix = ig - 1;

    lcm[1] = low;
    i = 1;
    for (; lcm[i] < high; ++i) lcm[i + 1] = mj[lcm[i]];
    const int l_lcm = i;
    int ih = l_lcm;
    int iv = 2;

    double d = 0.0;
    if (l_gcm != 2 || l_lcm != 2) {
      do {
        const int gcmix = gcm[ix];
        const int lcmiv = lcm[iv];
        if (gcmix > lcmiv) {
          const int gcmi1 = gcm[ix + 1];
          const double dx = (lcmiv - gcmi1 + 1) -
                            (x[lcmiv] - x[gcmi1]) * (gcmix - gcmi1) / (x[gcmix] - x[gcmi1]);
          ++iv;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv - 1;
          }
        } else {
          const int lcmiv1 = lcm[iv - 1];
          const double dx = (x[gcmix] - x[lcmiv1]) * (lcmiv - lcmiv1) / (x[lcmiv] - x[lcmiv1]) -
                            (gcmix - lcmiv1 - 1);
          --ix;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv;
          }
        }
        if (ix < 1) ix = 1;
        if (iv > l_lcm) iv = l_lcm;
      } while (gcm[ix] != lcm[iv]);
    } else {
      d = 1.0;
    }
    if (d < dip) break;

    double dip_l = 0.0;
    for (int j = ig; j < l_gcm; ++j) {
      double max_t = 1.0;
      const int jb = gcm[j + 1];
      const int je = gcm[j];
      if (je - jb > 1 && x[je] != x[jb]) {
        const double c = (je - jb) / (x[je] - x[jb]);
        for (int jj = jb; jj <= je; ++jj) {
          const double t = (jj - jb + 1) - (x[jj] - x[jb]) * c;
          if (max_t < t) max_t = t;
        }
      }
      if (dip_l < max_t) dip_l = max_t;
    }
    double dip_u = 0.0;
    for (int j = ih; j < l_lcm; ++j) {
      double max_t = 1.0;
      const int jb = lcm[j];
      const int je = lcm[j + 1];
      if (je - jb > 1 && x[je] != x[jb]) {
        const double c = (je - jb) / (x[je] - x[jb]);
        for (int jj = jb; jj <= je; ++jj) {
          const double t = (x[jj] - x[jb]) * c - (jj - jb - 1);
          if (max_t < t) max_t = t;
        }
      }
      if (dip_u < max_t) dip_u = max_t;
    }
    const double dip_new = dip_u > dip_l ? dip_u : dip_l;
    if (dip < dip_new) dip = dip_new;

    // Without this check the cycle can repeat forever.
    if (low == gcm[ig] && high == lcm[ih]) break;
    low = gcm[ig];
    high = lcm[ih];
  }
  return dip / (2.0 * n);
}

}  // namespace modetest
