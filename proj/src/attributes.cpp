// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcomm/attributes.hpp"

#include <cstdlib>

#include <fmt/format.h>

namespace lcomm
{
std::string attr_to_string(const attr_value_t& value)
{
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>)
          return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, int64_t>)
          return std::to_string(v);
        else
          return v;
      },
      value);
}

const std::vector<global_attr_def_t>& global_attr_defs()
{
  static const std::vector<global_attr_def_t> defs = {
      {"transport", "LCI_TRANSPORT", std::string("loopback")},
      {"rank", "LCI_RANK", int64_t{0}},
      {"nranks", "LCI_NRANKS", int64_t{1}},
      {"hosts", "LCI_HOSTS", std::string()},
      {"tcp_port_base", "LCI_TCP_PORT_BASE", int64_t{8460}},
      {"connect_timeout_ms", "LCI_CONNECT_TIMEOUT_MS", int64_t{30000}},
      {"packet_size", "LCI_PACKET_SIZE", int64_t{8192}},
      {"packet_count", "LCI_PACKET_COUNT", int64_t{1024}},
      {"cq_capacity", "LCI_CQ_CAPACITY", int64_t{65536}},
      {"match_engine", "LCI_MATCH_ENGINE", std::string("map")},
      {"match_policy", "LCI_MATCH_POLICY", std::string("rank_tag")},
      {"alloc_default_resources", "LCI_ALLOC_DEFAULT", true},
      {"max_progress_batch", "LCI_MAX_PROGRESS_BATCH", int64_t{64}},
      {"outbound_queue_depth", "LCI_OUTBOUND_QUEUE_DEPTH", int64_t{1024}},
  };
  return defs;
}

namespace
{
attr_value_t parse_env_value(const global_attr_def_t& def, const char* text)
{
  std::string s(text);
  if (std::holds_alternative<std::string>(def.default_value)) return s;
  if (std::holds_alternative<bool>(def.default_value)) {
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  } else {
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (!s.empty() && end && *end == '\0') return static_cast<int64_t>(v);
  }
  throw_fatal(errorcode_t::fatal_bad_arg,
              fmt::format("malformed value '{}' for {}", s, def.env));
}

bool same_type(const attr_value_t& a, const attr_value_t& b)
{
  return a.index() == b.index();
}
}  // namespace

attr_set_t load_runtime_config(const attr_set_t& init_args)
{
  attr_set_t config;
  for (const auto& def : global_attr_defs()) {
    const char* env = std::getenv(def.env);
    config[def.name] = env ? parse_env_value(def, env) : def.default_value;
  }
  return resolve_attrs("runtime", config, init_args);
}

attr_set_t resolve_attrs(const char* resource, const attr_set_t& defaults,
                         const attr_set_t& args)
{
  attr_set_t out = defaults;
  for (const auto& [name, value] : args) {
    auto it = out.find(name);
    if (it == out.end())
      throw_fatal(errorcode_t::fatal_bad_arg,
                  fmt::format("unknown {} attribute '{}'", resource, name));
    if (!same_type(it->second, value))
      throw_fatal(errorcode_t::fatal_bad_arg,
                  fmt::format("wrong value type for {} attribute '{}'",
                              resource, name));
    it->second = value;
  }
  return out;
}

const attr_value_t& find_attr(const attr_set_t& set, const std::string& name,
                              const char* resource)
{
  auto it = set.find(name);
  if (it == set.end())
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("{} has no attribute '{}'", resource, name));
  return it->second;
}

int64_t attr_int(const attr_set_t& set, const std::string& name)
{
  return std::get<int64_t>(find_attr(set, name, "resource"));
}

bool attr_bool(const attr_set_t& set, const std::string& name)
{
  return std::get<bool>(find_attr(set, name, "resource"));
}

const std::string& attr_str(const attr_set_t& set, const std::string& name)
{
  return std::get<std::string>(find_attr(set, name, "resource"));
}

}  // namespace lcomm
