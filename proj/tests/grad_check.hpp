// Copyright 2026 The latent-lens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Central finite-difference oracle for the ELBO gradient, shared by the unit
// tests and the acceptance suite.

#ifndef LATENT_LENS_TESTS_GRAD_CHECK_HPP_
#define LATENT_LENS_TESTS_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "latent_lens/vae.hpp"

namespace gradcheck {

struct TensorError {
  std::string name;
  double rel_error;  // ||analytic - numeric|| / (||analytic|| + ||numeric||)
};

inline std::vector<TensorError> compare(const latent_lens::Params& p,
                                        const std::vector<latent_lens::TokenSequence>& batch, double beta,
                                        const Eigen::MatrixXd& eps, latent_lens::ReconReduction reduction,
                                        double h = 1e-3) {
  latent_lens::Params grad = latent_lens::Params::Zeros(p.config);
  latent_lens::elbo_loss_with_noise(p, batch, beta, eps, &grad, reduction);
  latent_lens::Params probe = p;
  auto probe_tensors = latent_lens::tensors(probe);
  const auto grad_tensors = latent_lens::tensors(static_cast<const latent_lens::Params&>(grad));
  std::vector<TensorError> out;
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (Eigen::Index k = 0; k < probe_tensors[t].size(); ++k) {
      double& w = probe_tensors[t].data[k];
      const double saved = w;
      w = saved + h;
      const double up = latent_lens::elbo_loss_with_noise(probe, batch, beta, eps, nullptr, reduction).loss;
      w = saved - h;
      const double down = latent_lens::elbo_loss_with_noise(probe, batch, beta, eps, nullptr, reduction).loss;
      w = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grad_tensors[t].data[k];
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
    }
    const double denom = std::sqrt(a2) + std::sqrt(n2);
    out.push_back({std::string(probe_tensors[t].name), denom > 0.0 ? std::sqrt(diff2) / denom : 0.0});
  }
  return out;
}

inline double worst(const std::vector<TensorError>& errors) {
  double w = 0.0;
  for (const auto& e : errors) w = std::max(w, e.rel_error);
  return w;
}

}  // namespace gradcheck

#endif  // LATENT_LENS_TESTS_GRAD_CHECK_HPP_
