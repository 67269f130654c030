#pragma once

#include <string>
#include <string_view>

#include "emu/feature_store.hpp"
#include "emu/nn.hpp"

namespace emu::nn {

inline constexpr uint32_t kEmupVersion = 1;

// EMUP checkpoint: magic, version, parameter count, then per parameter the
// name, rank, extents and f32 values, in store order. Deterministic bytes.
inline std::string save_params(const ParamStore& store) {
  std::string out;
  out += "EMUP";
  detail::put_u32(out, kEmupVersion);
  auto params = store.all();
  detail::put_u32(out, static_cast<uint32_t>(params.size()));
  for (const Parameter* p : params) {
    if (p->name.size() > 0xffff) throw std::logic_error("parameter name too long");
    detail::put_u16(out, static_cast<uint16_t>(p->name.size()));
    out += p->name;
    detail::put_u32(out, static_cast<uint32_t>(p->value.shape.size()));
    for (int e : p->value.shape) detail::put_u32(out, static_cast<uint32_t>(e));
    for (double v : p->value.data) detail::put_f32(out, static_cast<float>(v));
  }
  return out;
}

// Loads into an existing store; every name and shape must match the model
// that was constructed from the run configuration.
inline void load_params(ParamStore& store, std::string_view bytes) {
  detail::ByteReader r(bytes, "EMUP");
  if (bytes.size() < 4 || r.bytes(4) != "EMUP") throw ValidationError("EMUP: bad magic");
  uint32_t version = r.u32();
  if (version != kEmupVersion)
    throw ValidationError("EMUP: unsupported version " + std::to_string(version));
  uint32_t count = r.u32();
  if (count != store.count())
    throw ValidationError("EMUP: checkpoint has " + std::to_string(count) + " parameters, model has " +
                          std::to_string(store.count()));
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t name_len = r.u16();
    std::string name = r.bytes(name_len);
    Parameter* p = nullptr;
    try {
      p = &store.get(name);
    } catch (const std::logic_error&) {
      throw ValidationError("EMUP: unknown parameter '" + name + "'");
    }
    uint32_t rank = r.u32();
    if (rank != p->value.shape.size())
      throw ValidationError("EMUP: rank mismatch for '" + name + "'");
    std::vector<int> shape(rank);
    for (uint32_t k = 0; k < rank; ++k) shape[k] = static_cast<int>(r.u32());
    if (shape != p->value.shape) throw ValidationError("EMUP: shape mismatch for '" + name + "'");
    for (double& v : p->value.data) v = r.f32();
  }
  r.expect_exhausted();
}

}  // namespace emu::nn
