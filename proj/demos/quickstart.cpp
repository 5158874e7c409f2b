// Learns the Henon-Heiles Hamiltonian from 100 noise-free field samples and
// reports how well the potential is recovered.

#include <iostream>

#include "hamkrr/hamkrr.hpp"

int main() {
  using namespace hamkrr;

  const auto system = builtin("henon_heiles");
  const auto data = sample_dataset(system, 100, uniform_box(4, -1, 1), 0.0, 0);

  const double lambda = scaled_lambda(5e-6, data.n(), 0.4);
  const auto model = fit(data, GaussianKernel(3.5), lambda);
  std::cout << "fitted N=" << data.n() << " lambda=" << lambda
            << " residual=" << model.residual << '\n';

  const GridSpec grid = GridSpec::square(-1, 1, 50);
  const Matrix truth = potential_grid([&](const Vector& z) { return system.h(z); }, grid);
  const Matrix learned = potential_grid([&](const Vector& z) { return predict_h(model, z); }, grid);
  const ErrorReport rep = shifted_error(truth, learned);
  std::cout << "potential on [-1,1]^2: shift=" << rep.shift << " sup=" << rep.sup_error
            << " mean=" << rep.mean_error << '\n';

  // The learned field is Hamiltonian and can be integrated like the true one.
  const Vector z0 = Vector::Constant(4, 0.2);
  const double flow_err = flow_sup_error([&](const Vector& z) { return system.field(z); },
                                         [&](const Vector& z) { return predict_field(model, z); },
                                         z0, 1.0, 1e-2);
  std::cout << "flow discrepancy from z0=(0.2,0.2,0.2,0.2) over T=1: " << flow_err << '\n';

  // Same mean as a Gaussian process with noise variance lambda * N.
  const GPPosterior gp(data, GaussianKernel(3.5), lambda * static_cast<double>(data.n()));
  std::cout << "GP mean at z0: " << gp.mean(z0) << " (ridge " << predict_h(model, z0)
            << "), variance " << gp.variance(z0) << '\n';
}
