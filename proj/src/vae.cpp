#include "evae/vae.hpp"

#include <cmath>

#include "evae/errors.hpp"

namespace evae {
namespace {

std::vector<std::size_t> encoder_widths(const VaeArchitecture& a) {
  std::vector<std::size_t> w{a.input_dim};
  w.insert(w.end(), a.hidden.begin(), a.hidden.end());
  w.push_back(2 * a.latent_dim);
  return w;
}

std::vector<std::size_t> decoder_widths(const VaeArchitecture& a) {
  std::vector<std::size_t> w{a.latent_dim};
  w.insert(w.end(), a.hidden.rbegin(), a.hidden.rend());
  w.push_back(a.input_dim);
  return w;
}

void validate(const VaeArchitecture& a) {
  if (a.latent_dim == 0) throw ConfigError("VaeModel: latent_dim must be positive");
  if (a.input_dim == 0) throw ConfigError("VaeModel: input_dim must be positive");
}

void check_unit_interval(const Tensor& x) {
  for (double v : x.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError("Bernoulli VAE input outside [0, 1]: " + std::to_string(v));
    }
  }
}

}  // namespace

std::string to_string(Likelihood l) {
  return l == Likelihood::bernoulli ? "bernoulli" : "gaussian";
}

Likelihood likelihood_from_string(const std::string& name) {
  if (name == "bernoulli") return Likelihood::bernoulli;
  if (name == "gaussian") return Likelihood::gaussian;
  throw ConfigError("unknown likelihood '" + name + "'");
}

VaeModel::VaeModel(VaeArchitecture arch, ParamStore params)
    : arch_(std::move(arch)),
      params_(std::move(params)),
      encoder_(Net::mlp_layout("enc", encoder_widths(arch_), arch_.activation)),
      decoder_(Net::mlp_layout("dec", decoder_widths(arch_), arch_.activation)) {}

VaeModel VaeModel::create(const VaeArchitecture& arch, std::uint64_t seed) {
  validate(arch);
  ParamStore params;
  Rng rng(seed);
  Net::mlp("enc", encoder_widths(arch), arch.activation, params, rng);
  Net::mlp("dec", decoder_widths(arch), arch.activation, params, rng);
  return VaeModel(arch, std::move(params));
}

VaeModel VaeModel::from_params(const VaeArchitecture& arch, ParamStore params) {
  validate(arch);
  VaeModel m(arch, std::move(params));
  for (const Net* net : {&m.encoder_, &m.decoder_}) {
    for (const auto& layer : net->layers()) {
      const auto* a = std::get_if<Affine>(&layer);
      if (a == nullptr) continue;
      const std::vector<std::size_t> wshape{a->in, a->out};
      const std::vector<std::size_t> bshape{1, a->out};
      if (m.params_.value(a->weight).shape() != wshape ||
          m.params_.value(a->bias).shape() != bshape) {
        throw IntegrityError("VaeModel: parameter shapes do not match architecture at " +
                             a->weight);
      }
    }
  }
  if (m.params_.size() != 2 * (arch.hidden.size() + 1) * 2) {
    throw IntegrityError("VaeModel: unexpected parameter count");
  }
  return m;
}

VaeModel::EncodeVars VaeModel::encode(Graph& g, Var x) const {
  if (arch_.likelihood == Likelihood::bernoulli) check_unit_interval(g.value(x));
  Var h = encoder_.forward(g, x);
  return {g.slice_cols(h, 0, arch_.latent_dim),
          g.slice_cols(h, arch_.latent_dim, arch_.latent_dim)};
}

Var VaeModel::decode(Graph& g, Var z) const { return decoder_.forward(g, z); }

LatentStats VaeModel::encode(const Tensor& x) const {
  Graph g(params_);
  auto vars = encode(g, g.constant(x));
  return {g.value(vars.mu), g.value(vars.log_var)};
}

Tensor VaeModel::decode_raw(const Tensor& z) const {
  Graph g(params_);
  return g.value(decode(g, g.constant(z)));
}

Tensor VaeModel::decode_mean(const Tensor& z) const {
  Graph g(params_);
  Var out = decode(g, g.constant(z));
  if (arch_.likelihood == Likelihood::bernoulli) out = g.sigmoid(out);
  return g.value(out);
}

Tensor reparameterize(const LatentStats& stats, Rng& rng) {
  if (!stats.mu.same_shape(stats.log_var)) {
    throw ConfigError("reparameterize: mu and log_var shapes differ");
  }
  Tensor z(stats.mu.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = stats.mu[i] + rng.normal() * std::exp(0.5 * stats.log_var[i]);
  }
  return z;
}

Var reparameterize(Graph& g, Var mu, Var log_var, Rng& rng) {
  Tensor eps(g.value(mu).shape());
  for (double& e : eps.values()) e = rng.normal();
  Var sigma = g.exp(g.scale(log_var, 0.5));
  return g.add(mu, g.mul(g.constant(std::move(eps)), sigma));
}

std::vector<double> kl_per_dim(const LatentStats& stats) {
  if (!stats.mu.same_shape(stats.log_var) || stats.mu.rank() != 2) {
    throw ConfigError("kl_per_dim: mu and log_var must be matrices of equal shape");
  }
  const std::size_t n = stats.mu.rows();
  const std::size_t d = stats.mu.cols();
  std::vector<double> kl(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double m = stats.mu.at(r, c);
      const double lv = stats.log_var.at(r, c);
      kl[c] += 0.5 * (m * m + std::exp(lv) - lv - 1.0);
    }
  }
  for (double& k : kl) k = std::max(0.0, k / static_cast<double>(n));
  return kl;
}

Var kl_per_dim(Graph& g, Var mu, Var log_var) {
  // 0.5 * (mu^2 + e^lv - lv - 1)
  Var inner = g.sub(g.add(g.square(mu), g.exp(log_var)), log_var);
  return g.mean_rows(g.scale(g.add_scalar(inner, -1.0), 0.5));
}

double recon_loss(const Tensor& decoder_out, const Tensor& x, Likelihood likelihood) {
  Graph g;
  Var out = g.constant(decoder_out);
  Var loss = likelihood == Likelihood::bernoulli ? g.bernoulli_nll(out, x)
                                                 : g.gaussian_nll(out, x);
  return g.value(loss).item();
}

ElboTerms elbo_loss(Graph& g, const VaeModel& model, const Tensor& x, double beta, Rng& rng) {
  if (!(beta >= 0.0)) throw ConfigError("elbo_loss: beta must be >= 0");
  auto [mu, log_var] = model.encode(g, g.constant(x));
  Var z = reparameterize(g, mu, log_var, rng);
  Var out = model.decode(g, z);
  Var recon = model.arch().likelihood == Likelihood::bernoulli ? g.bernoulli_nll(out, x)
                                                               : g.gaussian_nll(out, x);
  Var kl_dims = kl_per_dim(g, mu, log_var);
  Var loss = g.add(recon, g.scale(g.sum(kl_dims), beta));

  ElboReport r;
  r.beta = beta;
  r.recon_loss = g.value(recon).item();
  const Tensor& kd = g.value(kl_dims);
  r.kl_per_dim.assign(kd.values().begin(), kd.values().end());
  // Closed form is nonnegative; clamp rounding residue only.
  for (double& k : r.kl_per_dim) k = std::max(0.0, k);
  r.kl_total = 0.0;
  for (double k : r.kl_per_dim) r.kl_total += k;
  r.total_loss = r.recon_loss + beta * r.kl_total;
  return {loss, std::move(r)};
}

ElboReport evaluate_elbo(const VaeModel& model, const Tensor& x, double beta, Rng& rng) {
  Graph g(model.params());
  return elbo_loss(g, model, x, beta, rng).report;
}

}  // namespace evae
