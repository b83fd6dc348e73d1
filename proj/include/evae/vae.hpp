#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evae/graph.hpp"
#include "evae/net.hpp"
#include "evae/param_store.hpp"
#include "evae/rng.hpp"
#include "evae/tensor.hpp"

namespace evae {

enum class Likelihood { bernoulli, gaussian };

std::string to_string(Likelihood l);
Likelihood likelihood_from_string(const std::string& name);

struct VaeArchitecture {
  std::size_t input_dim = 1024;
  std::vector<std::size_t> hidden{256, 256};
  std::size_t latent_dim = 10;
  Activation activation = Activation::relu;
  Likelihood likelihood = Likelihood::bernoulli;

  bool operator==(const VaeArchitecture&) const = default;
};

/// Diagonal Gaussian posterior parameters, one row per sample.
struct LatentStats {
  Tensor mu;
  Tensor log_var;
};

/// Per-batch loss decomposition. recon_loss is the distortion D, kl_total the
/// rate R, both mean per sample in nats.
struct ElboReport {
  double recon_loss = 0.0;
  double kl_total = 0.0;
  std::vector<double> kl_per_dim;
  double beta = 0.0;
  double total_loss = 0.0;
  std::uint64_t iteration = 0;

  /// Negative ELBO with unit KL weight, D + R.
  double neg_elbo() const { return recon_loss + kl_total; }
};

/// Gaussian encoder q(z|x) and Bernoulli (or unit Gaussian) decoder p(x|z).
///
/// The encoder maps input -> hidden... -> 2 * latent_dim where the first half
/// of the output is mu and the second half log sigma^2. The decoder mirrors
/// the hidden widths and emits logits (Bernoulli) or means (Gaussian).
class VaeModel {
 public:
  struct EncodeVars {
    Var mu;
    Var log_var;
  };

  VaeModel() = default;

  static VaeModel create(const VaeArchitecture& arch, std::uint64_t seed);
  /// Rebuilds a model around existing parameters (e.g. from a checkpoint).
  static VaeModel from_params(const VaeArchitecture& arch, ParamStore params);

  const VaeArchitecture& arch() const { return arch_; }
  std::size_t latent_dim() const { return arch_.latent_dim; }
  std::size_t input_dim() const { return arch_.input_dim; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const Net& encoder() const { return encoder_; }
  const Net& decoder() const { return decoder_; }

  EncodeVars encode(Graph& g, Var x) const;
  Var decode(Graph& g, Var z) const;

  LatentStats encode(const Tensor& x) const;
  /// Raw decoder output: logits for Bernoulli, means for Gaussian.
  Tensor decode_raw(const Tensor& z) const;
  /// Pixel means in data space (sigmoid of logits for Bernoulli).
  Tensor decode_mean(const Tensor& z) const;

 private:
  VaeModel(VaeArchitecture arch, ParamStore params);

  VaeArchitecture arch_;
  ParamStore params_;
  Net encoder_;
  Net decoder_;
};

/// z = mu + eps * exp(log_var / 2), eps ~ N(0, I) drawn row-major from rng.
Tensor reparameterize(const LatentStats& stats, Rng& rng);
Var reparameterize(Graph& g, Var mu, Var log_var, Rng& rng);

/// Closed-form KL(q || N(0, I)) per latent dimension, averaged over the batch.
std::vector<double> kl_per_dim(const LatentStats& stats);
/// Graph version; returns a (1, latent_dim) node.
Var kl_per_dim(Graph& g, Var mu, Var log_var);

/// Mean-per-sample negative log-likelihood of x under the decoder output.
double recon_loss(const Tensor& decoder_out, const Tensor& x,
                  Likelihood likelihood = Likelihood::bernoulli);

struct ElboTerms {
  Var loss;
  ElboReport report;
};

/// Builds recon + beta * KL on `g` for batch x (one z sample per row).
ElboTerms elbo_loss(Graph& g, const VaeModel& model, const Tensor& x, double beta, Rng& rng);

/// Forward-only evaluation of the same quantities.
ElboReport evaluate_elbo(const VaeModel& model, const Tensor& x, double beta, Rng& rng);

}  // namespace evae
