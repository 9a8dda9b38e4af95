#pragma once

#include <optional>
#include <string>

#include "tefl/adapter.hpp"
#include "tefl/forecaster.hpp"

namespace tefl {

// On-disk model state. Plain text so diffs and round trips are inspectable:
//
//   TEFL-CKPT v1
//   <model kind> <dims...> wnorm=<on|off>     e.g. "linear 96 96 wnorm=off"
//                                             or   "mlp 96 128 96 wnorm=on"
//   <adapter kind> <H> <r>                    or   "none"
//   <parameters...>
//
// Parameters are whitespace-separated shortest round-trip decimals in chunk
// order (model chunks, then adapter chunks), so save/load is bit-exact.
struct Checkpoint {
    Forecaster model;
    std::optional<Adapter> adapter;
    bool window_norm = false;
};

inline constexpr const char* kCheckpointMagic = "TEFL-CKPT v1";

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tefl
