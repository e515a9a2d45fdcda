#include "htbnn/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "htbnn/errors.hpp"
#include "htbnn/serialize.hpp"
#include "htbnn/stats.hpp"

namespace htbnn {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

double sse(const MatrixXd& out, const VectorXd& Y) {
  if (Y.size() == 0) return 0.0;
  return (Y.transpose() - out.row(0)).squaredNorm();
}

void check_data(const Architecture& arch, const RegressionData& data) {
  if (data.X.cols() != data.Y.size()) throw StructuralError("X and Y have different lengths");
  if (data.X.rows() != arch.input_dim()) throw StructuralError("data dimension differs from the network input");
  if (arch.output_dim() != 1) throw StructuralError("regression needs a scalar-output network");
  if (!data.X.allFinite() || !data.Y.allFinite()) throw PreconditionError("data must be finite");
}

}  // namespace

double log_tempered_posterior(const Network& net, const RegressionData& data, double alpha, const Prior& prior) {
  check_data(net.architecture(), data);
  const double s = data.n() ? sse(forward(net, data.X), data.Y) : 0.0;
  return -0.5 * alpha * s + prior.log_density(net.coefficients());
}

void TemperConfig::validate(std::size_t T) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie strictly inside (0, 1)");
  if (steps < 1 || burnin < 0 || thin < 1) throw PreconditionError("chain lengths must be positive");
  if (chains < 1) throw PreconditionError("need at least one chain");
  if (!(proposal_scale > 0.0)) throw PreconditionError("proposal scale must be positive");
  if (refresh_probability < 0.0 || refresh_probability > 1.0) throw PreconditionError("refresh probability outside [0, 1]");
  if (!free.empty() && free.size() != T) throw StructuralError("free mask length differs from the coefficient count");
  if (initial && initial->size() != T) throw StructuralError("initial network has the wrong architecture");
}

namespace {

// Layer activations for the current coefficients, updated one coefficient at a time.
class CachedForward {
  using ConstBlock = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  ConstBlock block(const VectorXd& theta, int l) const {
    return {theta.data() + arch_.layer_offset(l), arch_.width(l), arch_.width(l - 1) + 1};
  }
  auto weights(const VectorXd& theta, int l) const { return block(theta, l).rightCols(arch_.width(l - 1)); }
  auto shift(const VectorXd& theta, int l) const { return block(theta, l).col(0); }

 public:
  CachedForward(const Architecture& arch, const MatrixXd& X) : arch_(arch), L_(arch.depth()) {
    pre_.resize(static_cast<std::size_t>(L_) + 2);
    act_.resize(static_cast<std::size_t>(L_) + 1);
    act_[0] = X;
  }

  void reset(const VectorXd& theta) {
    for (int l = 1; l <= L_ + 1; ++l) {
      pre_[l] = weights(theta, l) * act_[l - 1];
      pre_[l].colwise() += shift(theta, l);
      if (l <= L_) act_[l] = pre_[l].cwiseMax(0.0);
    }
  }

  const MatrixXd& output() const { return pre_[L_ + 1]; }

  /// Output after theta_k += delta, with the touched layers kept for commit().
  const MatrixXd& propose(const VectorXd& theta, std::size_t k, double delta) {
    const auto [l, i, j] = arch_.position(k);
    layer_ = l;
    row_ = i;
    prow_ = pre_[l].row(i);
    if (j == 0)
      prow_.array() += delta;
    else
      prow_ += delta * act_[l - 1].row(j - 1);
    if (l == L_ + 1) {
      tail_out_ = pre_[l];
      tail_out_.row(i) = prow_;
      touched_ = false;
      return tail_out_;
    }
    arow_ = prow_.cwiseMax(0.0);
    const RowVectorXd diff = arow_ - act_[l].row(i);
    touched_ = diff.any();
    tail_pre_.clear();
    tail_act_.clear();
    if (!touched_) {
      tail_out_ = output();
      return tail_out_;
    }
    MatrixXd p = pre_[l + 1] + weights(theta, l + 1).col(i) * diff;
    for (int m = l + 1; m <= L_ + 1; ++m) {
      if (m > l + 1) {
        p = weights(theta, m) * tail_act_.back();
        p.colwise() += shift(theta, m);
      }
      if (m <= L_) {
        tail_act_.push_back(p.cwiseMax(0.0));
        tail_pre_.push_back(std::move(p));
      } else {
        tail_out_ = std::move(p);
      }
    }
    return tail_out_;
  }

  void commit() {
    const int l = layer_;
    pre_[l].row(row_) = prow_;
    if (l == L_ + 1) return;
    act_[l].row(row_) = arow_;
    if (!touched_) return;
    for (std::size_t t = 0; t < tail_act_.size(); ++t) {
      pre_[l + 1 + static_cast<int>(t)] = std::move(tail_pre_[t]);
      act_[l + 1 + static_cast<int>(t)] = std::move(tail_act_[t]);
    }
    pre_[L_ + 1] = std::move(tail_out_);
  }

 private:
  const Architecture& arch_;
  int L_;
  std::vector<MatrixXd> pre_, act_;
  int layer_ = 0, row_ = 0;
  bool touched_ = false;
  RowVectorXd prow_, arow_;
  std::vector<MatrixXd> tail_pre_, tail_act_;
  MatrixXd tail_out_;
};

ChainResult run_one(const RegressionData& data, const Architecture& arch, const Prior& prior, const TemperConfig& cfg,
                    int chain_id) {
  const std::size_t T = arch.size();
  Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(chain_id));
  std::vector<std::size_t> free_idx;
  for (std::size_t k = 0; k < T; ++k)
    if (cfg.free.empty() || cfg.free[k]) free_idx.push_back(k);

  VectorXd theta = cfg.initial ? cfg.initial->coefficients() : VectorXd::Zero(static_cast<Eigen::Index>(T));
  const bool draw_init = !cfg.initial;
  const double a = cfg.alpha;
  CachedForward cache(arch, data.X);

  ChainResult res;
  double lp = -std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt <= 100; ++attempt) {
    if (draw_init || attempt > 0)
      for (std::size_t k : free_idx) theta[static_cast<Eigen::Index>(k)] = prior.sample_coordinate(k, rng);
    if (theta.allFinite()) {
      cache.reset(theta);
      lp = -0.5 * a * sse(cache.output(), data.Y) + prior.log_density(theta);
    }
    if (std::isfinite(lp)) break;
    res.init_retries = attempt + 1;
  }
  if (!std::isfinite(lp)) throw NumericalError("log posterior stayed non-finite after 100 re-initializations");

  double cur_sse = sse(cache.output(), data.Y);
  double cur_prior = prior.log_density(theta);

  VectorXd step(static_cast<Eigen::Index>(T));
  for (std::size_t k = 0; k < T; ++k)
    step[static_cast<Eigen::Index>(k)] = cfg.proposal_scale * std::exp(-prior.log_inv_sigma()[static_cast<Eigen::Index>(k)]);

  constexpr int kBatch = 20;
  std::vector<int> batch_prop(T, 0), batch_acc(T, 0);
  int batches = 0;

  const int total = cfg.burnin + cfg.steps;
  const int kept = cfg.steps / cfg.thin;
  res.samples.resize(static_cast<Eigen::Index>(T), kept);
  res.log_posterior.reserve(static_cast<std::size_t>(kept));
  int stored = 0;

  for (int sweep = 0; sweep < total; ++sweep) {
    const bool adapting = sweep < cfg.burnin;
    for (std::size_t k : free_idx) {
      const auto ki = static_cast<Eigen::Index>(k);
      const double old = theta[ki];
      const bool refresh = rng.uniform() < cfg.refresh_probability;
      const double prop = refresh ? prior.sample_coordinate(k, rng) : old + step[ki] * rng.normal();
      const MatrixXd& out = cache.propose(theta, k, prop - old);
      const double new_sse = sse(out, data.Y);
      const double d_prior = prior.log_density_coordinate(k, prop) - prior.log_density_coordinate(k, old);
      // An independence proposal from the prior cancels the prior ratio.
      double log_ratio = -0.5 * a * (new_sse - cur_sse) + (refresh ? 0.0 : d_prior);
      if (!std::isfinite(new_sse) || !std::isfinite(d_prior)) log_ratio = -std::numeric_limits<double>::infinity();
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (!adapting) {
        ++res.proposed;
        res.accepted += accept;
      }
      if (!refresh) {
        ++batch_prop[k];
        batch_acc[k] += accept;
      }
      if (accept) {
        cache.commit();
        theta[ki] = prop;
        cur_sse = new_sse;
        cur_prior += d_prior;
      }
    }

    if (adapting && (sweep + 1) % kBatch == 0) {
      ++batches;
      const double adj = std::min(0.5, 1.0 / std::sqrt(static_cast<double>(batches)));
      for (std::size_t k : free_idx) {
        if (batch_prop[k] == 0) continue;
        const double rate = static_cast<double>(batch_acc[k]) / batch_prop[k];
        step[static_cast<Eigen::Index>(k)] *= std::exp(rate > cfg.target_acceptance ? adj : -adj);
        batch_prop[k] = batch_acc[k] = 0;
      }
    }

    // Resynchronize the incrementally updated state against a full recomputation.
    if ((sweep + 1) % 100 == 0 || sweep + 1 == total) {
      cache.reset(theta);
      cur_sse = sse(cache.output(), data.Y);
      cur_prior = prior.log_density(theta);
    }

    if (!adapting && (sweep - cfg.burnin + 1) % cfg.thin == 0 && stored < kept) {
      res.samples.col(stored++) = theta;
      res.log_posterior.push_back(-0.5 * a * cur_sse + cur_prior);
    }

    if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_every > 0 && (sweep + 1) % cfg.checkpoint_every == 0) {
      const auto path = std::filesystem::path(cfg.checkpoint_dir) / ("chain_" + std::to_string(chain_id) + ".ckpt");
      save_checkpoint(path.string(), {chain_id, sweep + 1, -0.5 * a * cur_sse + cur_prior, res.proposed, res.accepted,
                                      Network(arch, theta)});
    }
  }
  res.samples.conservativeResize(Eigen::NoChange, stored);
  res.step_sizes = step;
  return res;
}

}  // namespace

double ChainOutput::acceptance_rate() const {
  long long p = 0, a = 0;
  for (const auto& c : chains) {
    p += c.proposed;
    a += c.accepted;
  }
  return p ? static_cast<double>(a) / static_cast<double>(p) : 0.0;
}

MatrixXd ChainOutput::pooled() const {
  Eigen::Index cols = 0;
  for (const auto& c : chains) cols += c.samples.cols();
  MatrixXd all(static_cast<Eigen::Index>(arch.size()), cols);
  Eigen::Index at = 0;
  for (const auto& c : chains) {
    all.middleCols(at, c.samples.cols()) = c.samples;
    at += c.samples.cols();
  }
  return all;
}

std::vector<Network> ChainOutput::networks() const {
  const MatrixXd all = pooled();
  std::vector<Network> out;
  out.reserve(static_cast<std::size_t>(all.cols()));
  for (Eigen::Index s = 0; s < all.cols(); ++s) out.emplace_back(arch, all.col(s));
  return out;
}

ChainOutput run_chain(const RegressionData& data, const Architecture& arch, const Prior& prior, const TemperConfig& cfg) {
  cfg.validate(arch.size());
  check_data(arch, data);
  if (!(prior.architecture() == arch)) throw StructuralError("prior and chain architectures differ");
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  ChainOutput out{arch, std::vector<ChainResult>(static_cast<std::size_t>(cfg.chains)), VectorXd(), 1.0};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int threads = std::min(cfg.chains, cfg.threads > 0 ? cfg.threads : static_cast<int>(hw));
  if (threads <= 1) {
    for (int c = 0; c < cfg.chains; ++c) out.chains[static_cast<std::size_t>(c)] = run_one(data, arch, prior, cfg, c);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int c = next++; c < cfg.chains; c = next++) {
          try {
            out.chains[static_cast<std::size_t>(c)] = run_one(data, arch, prior, cfg, c);
          } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<std::size_t> free_idx;
  for (std::size_t k = 0; k < arch.size(); ++k)
    if (cfg.free.empty() || cfg.free[k]) free_idx.push_back(k);
  out.rhat = VectorXd::Ones(static_cast<Eigen::Index>(free_idx.size()));
  for (std::size_t f = 0; f < free_idx.size(); ++f) {
    std::vector<std::vector<double>> traces;
    for (const auto& c : out.chains) {
      const auto row = c.samples.row(static_cast<Eigen::Index>(free_idx[f]));
      traces.emplace_back(row.data(), row.data() + 0);
      traces.back().resize(static_cast<std::size_t>(row.size()));
      for (Eigen::Index s = 0; s < row.size(); ++s) traces.back()[static_cast<std::size_t>(s)] = row(s);
    }
    const double r = split_rhat(traces);
    out.rhat[static_cast<Eigen::Index>(f)] = std::isfinite(r) ? r : 1.0;
  }
  std::vector<std::vector<double>> lps;
  for (const auto& c : out.chains) lps.push_back(c.log_posterior);
  const double r = split_rhat(lps);
  out.rhat_log_posterior = std::isfinite(r) ? r : 1.0;
  return out;
}

PredictiveBand posterior_predict(const Architecture& arch, const MatrixXd& samples, const MatrixXd& X, double B) {
  if (samples.cols() == 0) throw PreconditionError("posterior_predict needs a non-empty chain");
  if (!(B > 0.0)) throw PreconditionError("clip bound must be positive");
  const Eigen::Index m = X.cols(), S = samples.cols();
  MatrixXd values(S, m);
  for (Eigen::Index s = 0; s < S; ++s) {
    Network net(arch, samples.col(s));
    values.row(s) = forward(net, X).row(0).cwiseMax(-B).cwiseMin(B);
  }
  PredictiveBand band{values.colwise().mean().transpose(), VectorXd(m), VectorXd(m)};
  std::vector<double> col(static_cast<std::size_t>(S));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index s = 0; s < S; ++s) col[static_cast<std::size_t>(s)] = values(s, i);
    band.lower[i] = quantile(col, 0.05);
    band.upper[i] = quantile(col, 0.95);
  }
  return band;
}

Eigen::VectorXd clipped_mean(const Architecture& arch, const MatrixXd& samples, const MatrixXd& X, double B) {
  if (samples.cols() == 0) throw PreconditionError("clipped_mean needs a non-empty sample");
  if (!(B > 0.0)) throw PreconditionError("clip bound must be positive");
  VectorXd acc = VectorXd::Zero(X.cols());
  for (Eigen::Index s = 0; s < samples.cols(); ++s)
    acc += forward(Network(arch, samples.col(s)), X).row(0).transpose().cwiseMax(-B).cwiseMin(B);
  return acc / static_cast<double>(samples.cols());
}

PredictiveBand posterior_predict(const ChainOutput& chain, const MatrixXd& X, double B) {
  return posterior_predict(chain.arch, chain.pooled(), X, B);
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  os << "htbnn-checkpoint v1\n"
     << "chain " << ck.chain << "\nsweep " << ck.sweep << "\nlog_posterior " << format_double(ck.log_posterior)
     << "\nproposed " << ck.proposed << "\naccepted " << ck.accepted << '\n';
  write_network(os, ck.net);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path);
  std::string line, key;
  std::getline(is, line);
  if (line != "htbnn-checkpoint v1") throw StructuralError("not a checkpoint file: " + path);
  Checkpoint ck{0, 0, 0.0, 0, 0, Network::zeros(Architecture(1, {1, 1, 1}))};
  std::string value;
  auto field = [&](const char* name) {
    if (!(is >> key >> value) || key != name) throw StructuralError(std::string("checkpoint field missing: ") + name);
    return value;
  };
  ck.chain = std::stoi(field("chain"));
  ck.sweep = std::stoi(field("sweep"));
  ck.log_posterior = std::stod(field("log_posterior"));
  ck.proposed = std::stoll(field("proposed"));
  ck.accepted = std::stoll(field("accepted"));
  is >> std::ws;
  ck.net = read_network(is);
  return ck;
}

}  // namespace htbnn
