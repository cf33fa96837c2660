#include "evn.h"

#include <string>

#include "evn/error.hpp"
#include "evn/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

template <typename Fn>
evn_status wrap(Fn&& fn) {
  try {
    fn();
    return EVN_OK;
  } catch (const evn::UsageError& e) {
    g_last_error = e.what();
    return EVN_ERR_USAGE;
  } catch (const evn::DataError& e) {
    g_last_error = e.what();
    return EVN_ERR_DATA;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EVN_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return EVN_ERR_INTERNAL;
  }
}

}  // namespace

struct evn_config {
  evn::RunConfig config;
  std::string get_buffer;
};

extern "C" {

evn_config* evn_config_new(void) {
  return new (std::nothrow) evn_config();
}

void evn_config_free(evn_config* cfg) {
  delete cfg;
}

evn_status evn_config_load_file(evn_config* cfg, const char* path) {
  if (!cfg || !path) {
    g_last_error = "null argument";
    return EVN_ERR_USAGE;
  }
  return wrap([&] { cfg->config.load_file(path); });
}

evn_status evn_config_set(evn_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) {
    g_last_error = "null argument";
    return EVN_ERR_USAGE;
  }
  return wrap([&] { cfg->config.set(key, value); });
}

const char* evn_config_get(evn_config* cfg, const char* key) {
  if (!cfg || !key || !cfg->config.has(key)) return nullptr;
  cfg->get_buffer = cfg->config.get_str(key);
  return cfg->get_buffer.c_str();
}

evn_status evn_run_train(evn_config* cfg) {
  if (!cfg) {
    g_last_error = "null config";
    return EVN_ERR_USAGE;
  }
  return wrap([&] { evn::cmd_train(cfg->config); });
}

evn_status evn_run_predict(evn_config* cfg) {
  if (!cfg) {
    g_last_error = "null config";
    return EVN_ERR_USAGE;
  }
  return wrap([&] { evn::cmd_predict(cfg->config); });
}

evn_status evn_run_score(evn_config* cfg) {
  if (!cfg) {
    g_last_error = "null config";
    return EVN_ERR_USAGE;
  }
  return wrap([&] { evn::cmd_score(cfg->config); });
}

evn_status evn_run_analyze(evn_config* cfg) {
  if (!cfg) {
    g_last_error = "null config";
    return EVN_ERR_USAGE;
  }
  return wrap([&] { evn::cmd_analyze(cfg->config); });
}

const char* evn_last_error(void) {
  return g_last_error.c_str();
}

const char* evn_version(void) {
  return "1.0.0";
}

}  // extern "C"
