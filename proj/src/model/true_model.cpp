#include "cufun/model/true_model.hpp"

#include <cmath>

#include "cufun/errors.hpp"

namespace cufun {

TrueModel TrueModel::hawkes(HawkesParams params) {
  params.validate();
  TrueModel m;
  m.hawkes_ = std::move(params);
  return m;
}

TrueModel TrueModel::renewal(RenewalSpec spec) {
  spec.validate();
  TrueModel m;
  m.renewal_ = std::move(spec);
  return m;
}

TrueModel TrueModel::poisson(double rate) {
  if (!(rate > 0.0)) throw ValidationError("poisson rate must be positive");
  TrueModel m;
  m.poisson_rate_ = rate;
  return m;
}

std::optional<TrueModel> TrueModel::from_header(const DatasetHeader& header) {
  const nlohmann::json& p = header.params;
  const std::string process = p.value("process", std::string());
  if (process == "hawkes") {
    HawkesParams hp;
    hp.mu = p.at("mu").get<double>();
    hp.alphas = p.at("alphas").get<std::vector<double>>();
    hp.betas = p.at("betas").get<std::vector<double>>();
    return hawkes(std::move(hp));
  }
  if (process == "poisson") return poisson(p.at("rate").get<double>());
  if (process == "renewal") {
    const std::string dist = p.value("distribution", std::string());
    if (dist == "lognormal") {
      RenewalSpec s = RenewalSpec::stationary_lognormal(p.at("mean"), p.at("sd"));
      s.moments_of_interval = p.value("moments_of", std::string("interval")) == "interval";
      return renewal(std::move(s));
    }
    if (dist == "gamma") {
      const nlohmann::json& t = p.at("trend");
      return renewal(RenewalSpec::nonstationary_gamma(p.at("mean"), p.at("sd"),
                                                      t.at("amplitude"), t.at("period")));
    }
  }
  return std::nullopt;
}

double TrueModel::loglik(const EventSequence& seq) const {
  if (seq.empty()) return 0.0;
  if (hawkes_) {
    EventSequence uncensored = seq;
    uncensored.window_end = seq.arrival_times.back();
    return hawkes_exact_loglik(uncensored, *hawkes_);
  }
  const std::vector<double> taus = seq.intervals();
  double total = 0.0;
  if (renewal_) {
    if (renewal_->trend) {
      double prev = seq.origin;
      for (double t : seq.arrival_times) {
        total += nonstationary_interval_logpdf(*renewal_, prev, seq.origin + t);
        prev = seq.origin + t;
      }
    } else {
      for (double tau : taus) total += renewal_->interval_logpdf(tau);
    }
    return total;
  }
  for (double tau : taus) total += std::log(poisson_rate_) - poisson_rate_ * tau;
  return total;
}

std::vector<double> TrueModel::conditional_density(const EventSequence& seq, std::size_t elapsed,
                                                   std::span<const double> taus) const {
  if (elapsed > seq.size()) throw ValidationError("conditional_density: index out of range");
  std::vector<double> out;
  out.reserve(taus.size());
  const double last = elapsed == 0 ? 0.0 : seq.arrival_times[elapsed - 1];
  if (hawkes_) {
    EventSequence past = seq.truncated(elapsed);
    past.window_end = last;
    HawkesCompensator comp(past, *hawkes_);
    const double base = comp(last);
    for (double tau : taus) {
      const double s = last + tau;
      out.push_back(hawkes_intensity(s, past, *hawkes_) * std::exp(-(comp(s) - base)));
    }
    return out;
  }
  for (double tau : taus) {
    double lp;
    if (renewal_ && renewal_->trend)
      lp = nonstationary_interval_logpdf(*renewal_, seq.origin + last, seq.origin + last + tau);
    else if (renewal_)
      lp = renewal_->interval_logpdf(tau);
    else
      lp = std::log(poisson_rate_) - poisson_rate_ * tau;
    out.push_back(std::exp(lp));
  }
  return out;
}

NllResult TrueModel::nll(std::span<const EventSequence> sequences) const {
  NllResult r;
  for (const EventSequence& s : sequences) {
    r.total -= loglik(s);
    r.n_events += s.size();
  }
  r.per_event = r.n_events ? r.total / static_cast<double>(r.n_events) : 0.0;
  return r;
}

}  // namespace cufun
