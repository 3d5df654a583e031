#include "cboed/cboed.h"

#include <iostream>
#include <memory>
#include <string>

#include "cboed/error.hpp"
#include "cboed/inference.hpp"
#include "cboed/information.hpp"
#include "cboed/study.hpp"

struct cboed_model {
  std::unique_ptr<cboed::ForwardModel> impl;
};

struct cboed_samples {
  cboed::SampleSet impl;
};

namespace {

thread_local std::string g_last_error;

cboed_status fail(cboed_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
cboed_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CBOED_OK;
  } catch (const cboed::Error& e) {
    return fail(static_cast<cboed_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::exception& e) {
    return fail(CBOED_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(CBOED_INTERNAL_ERROR, "unknown failure");
  }
}

cboed::Parallelism threads_of(unsigned t) { return cboed::Parallelism{t}; }

}  // namespace

extern "C" {

const char* cboed_version(void) { return "1.0.0"; }

const char* cboed_status_name(cboed_status status) {
  if (status == CBOED_OK) return "Ok";
  if (status == CBOED_INTERNAL_ERROR) return "InternalError";
  if (status < CBOED_INVALID_ARGUMENT || status > CBOED_IO_ERROR) return "Unknown";
  return cboed::to_string(static_cast<cboed::ErrorCode>(static_cast<int>(status)));
}

const char* cboed_last_error(void) { return g_last_error.c_str(); }

size_t cboed_model_count(void) { return cboed::builtin_models().size(); }

const char* cboed_model_name(size_t index) {
  const auto& names = cboed::builtin_models();
  return index < names.size() ? names[index].c_str() : nullptr;
}

cboed_status cboed_model_create(const char* name, const char* params_json, cboed_model** out) {
  if (!name || !out) return fail(CBOED_INVALID_ARGUMENT, "name and out must not be NULL");
  *out = nullptr;
  return guarded([&] {
    cboed::Json params = cboed::Json::object();
    if (params_json) {
      try {
        params = cboed::Json::parse(params_json);
      } catch (const cboed::Json::parse_error& e) {
        throw cboed::Error(cboed::ErrorCode::kParseError, e.what());
      }
    }
    auto model = std::make_unique<cboed_model>();
    model->impl = cboed::make_model(name, params);
    *out = model.release();
  });
}

void cboed_model_destroy(cboed_model* model) { delete model; }

cboed_status cboed_model_dims(const cboed_model* model, size_t* n_params, size_t* n_qoi) {
  if (!model) return fail(CBOED_INVALID_ARGUMENT, "model is NULL");
  if (n_params) *n_params = model->impl->param_dims();
  if (n_qoi) *n_qoi = model->impl->qoi_count();
  return CBOED_OK;
}

cboed_status cboed_model_evaluate(const cboed_model* model, const double* lambda, size_t n_params, double* qoi,
                                  size_t n_qoi) {
  if (!model || !lambda || !qoi) return fail(CBOED_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    if (n_params != model->impl->param_dims() || n_qoi != model->impl->qoi_count()) {
      throw cboed::Error(cboed::ErrorCode::kDimensionMismatch, "buffer sizes do not match the model");
    }
    model->impl->evaluate(std::span<const double>(lambda, n_params), std::span<double>(qoi, n_qoi));
  });
}

cboed_status cboed_samples_create(const cboed_model* model, size_t n, uint64_t seed, unsigned threads,
                                  cboed_samples** out) {
  if (!model || !out) return fail(CBOED_INVALID_ARGUMENT, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    const cboed::UniformPrior prior(model->impl->space());
    auto s = std::make_unique<cboed_samples>();
    s->impl = cboed::evaluate_designs(*model->impl, cboed::sample_prior(prior, n, seed), threads_of(threads));
    *out = s.release();
  });
}

void cboed_samples_destroy(cboed_samples* samples) { delete samples; }

size_t cboed_samples_size(const cboed_samples* samples) { return samples ? samples->impl.size() : 0; }

cboed_status cboed_samples_row(const cboed_samples* samples, size_t i, double* params, size_t n_params, double* qoi,
                               size_t n_qoi) {
  if (!samples) return fail(CBOED_INVALID_ARGUMENT, "samples is NULL");
  return guarded([&] {
    const auto& s = samples->impl;
    if (i >= s.size()) throw cboed::Error(cboed::ErrorCode::kIndexOutOfRange, "row index out of range");
    if (params) {
      if (n_params != s.params().cols()) throw cboed::Error(cboed::ErrorCode::kDimensionMismatch, "parameter buffer size");
      std::copy_n(s.params().row(i).begin(), n_params, params);
    }
    if (qoi) {
      if (n_qoi != s.qoi().cols()) throw cboed::Error(cboed::ErrorCode::kDimensionMismatch, "QoI buffer size");
      std::copy_n(s.qoi().row(i).begin(), n_qoi, qoi);
    }
  });
}

cboed_status cboed_eig(const cboed_samples* samples, const size_t* qoi, size_t n_qoi, const double* sigma,
                       size_t n_sigma, size_t m_centers, unsigned threads, double* eig, size_t* n_infeasible) {
  if (!samples || !qoi || !sigma || !eig) return fail(CBOED_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    const cboed::DesignCandidate design{0, std::vector<size_t>(qoi, qoi + n_qoi), {}};
    const auto noise = cboed::NoiseModel::fixed(std::vector<double>(sigma, sigma + n_sigma));
    cboed::EigOptions opts;
    opts.parallelism = threads_of(threads);
    const auto est = cboed::expected_information_gain(samples->impl, design, noise, m_centers, opts);
    *eig = est.eig;
    if (n_infeasible) *n_infeasible = est.n_infeasible;
  });
}

cboed_status cboed_infer(const cboed_samples* samples, const size_t* qoi, size_t n_qoi, const double* center,
                         const double* sigma, double* information_gain, double* norm_constant,
                         double* acceptance_rate) {
  if (!samples || !qoi || !center || !sigma) return fail(CBOED_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    const cboed::DesignCandidate design{0, std::vector<size_t>(qoi, qoi + n_qoi), {}};
    const auto ds = cboed::select_design(samples->impl, design);
    const auto pf = cboed::fit_push_forward(ds, cboed::BandwidthRule::silverman());
    cboed::ObservedDensity obs(std::vector<double>(center, center + n_qoi), std::vector<double>(sigma, sigma + n_qoi));
    const auto ratios = cboed::posterior_ratios(pf, obs, ds);
    if (information_gain) *information_gain = cboed::kl_from_ratios(ratios);
    if (norm_constant) *norm_constant = ratios.norm_constant;
    if (acceptance_rate) *acceptance_rate = cboed::rejection_sample(ratios, samples->impl.seed()).acceptance_rate;
  });
}

int cboed_run_study(const char* config_path, const char* output_dir, unsigned threads, int quiet) {
  if (!config_path) {
    g_last_error = "config path is NULL";
    return 1;
  }
  cboed::RunOptions opts;
  opts.parallelism = threads_of(threads);
  if (output_dir) opts.output = output_dir;
  opts.quiet = quiet != 0;
  try {
    return cboed::run_study(config_path, opts, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // extern "C"
