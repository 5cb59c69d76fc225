#include <cstdio>

#include "nvmag/experiments.hpp"

using namespace nvmag;

// Calibrates the bath to a 9 us echo, then compares Monte Carlo XY16-4
// coherence with the filter-function prediction and prints the sensitivity
// of a short AC sweep.
int main() {
  const auto bath = calibrate_bath(9e-6, 10e-6);
  NoiseModel noise;
  noise.bath = bath;
  noise.quasi_static.sigma_delta = sigma_from_t2star(150e-9);
  const auto ens = sample_ensemble(DetectionVolume{}, DriveField::uniform(kPi / 48e-9), noise, 2000, 7);

  std::printf("bath b = %.4g rad/s, tau_c = %.3g s\n", bath.b, bath.tau_c);
  const auto r = run_coherence(SequenceFamily::xy16, 4, coherence_sweep(200e-6, 8), ens, bath,
                               noise.quasi_static.sigma_delta);
  std::printf("%-12s %-10s %-10s\n", "T_s", "monte_carlo", "analytic");
  for (std::size_t i = 0; i < r.total_time.size(); ++i)
    std::printf("%-12.4g %-10.4f %-10.4f\n", r.total_time[i], r.signal[i], r.analytic[i]);
  std::printf("fitted T2 = %.3g s, p = %.2f\n", r.fit.value("T2_s"), r.fit.value("p"));

  AcSenseSetup s;
  s.amplitudes = symmetric_grid(4e-8, 9);
  const auto ac = run_ac_magnetometry(s, ens, bath, ReadoutModel{});
  std::printf("delta_s = %.3g V, slope = %.4g V/T, eta = %.3g T/sqrt(Hz)\n", ac.report.delta_s,
              ac.report.max_slope, ac.report.eta);
}
