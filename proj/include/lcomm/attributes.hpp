// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_ATTRIBUTES_HPP
#define LCOMM_ATTRIBUTES_HPP

#include <cstdint>
#include <map>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "lcomm/core.hpp"

namespace lcomm
{
using attr_value_t = std::variant<int64_t, bool, std::string>;
using attr_set_t = std::map<std::string, attr_value_t>;

template <typename T>
attr_value_t to_attr_value(T v)
{
  if constexpr (std::is_same_v<std::decay_t<T>, bool>)
    return attr_value_t{v};
  else if constexpr (std::is_integral_v<std::decay_t<T>>)
    return attr_value_t{static_cast<int64_t>(v)};
  else
    return attr_value_t{std::string(v)};
}

std::string attr_to_string(const attr_value_t& value);

// A runtime-wide tunable: compiled default, optionally overridden by an
// environment variable, optionally overridden by a runtime_init argument.
struct global_attr_def_t {
  const char* name;
  const char* env;
  attr_value_t default_value;
};

const std::vector<global_attr_def_t>& global_attr_defs();

// init argument > environment variable > compiled default. Unknown names
// and malformed values are fatal.
attr_set_t load_runtime_config(const attr_set_t& init_args);

// Merges per-allocation arguments over the given defaults. Every argument
// must name a key of `defaults` with a matching value type.
attr_set_t resolve_attrs(const char* resource, const attr_set_t& defaults,
                         const attr_set_t& args);

const attr_value_t& find_attr(const attr_set_t& set, const std::string& name,
                              const char* resource);
int64_t attr_int(const attr_set_t& set, const std::string& name);
bool attr_bool(const attr_set_t& set, const std::string& name);
const std::string& attr_str(const attr_set_t& set, const std::string& name);

}  // namespace lcomm

#endif  // LCOMM_ATTRIBUTES_HPP
