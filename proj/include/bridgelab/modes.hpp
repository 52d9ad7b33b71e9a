#pragma once

#include <string>
#include <string_view>

namespace bridgelab {

// Which quantity a network's output represents, and therefore how training
// targets are built and how sampling steps are assembled.
//
//   DsbOriginal  next state, target rebuilt from two frozen-net evaluations
//   SDsb         next state, target is the cached neighbouring state
//   TrDsb        terminal point of the trajectory (x_0 backward / x_N forward)
//   FrDsb        average flow toward the terminal point
//   Ddpm         noise prediction on the variance-preserving chain (pretraining)
//   Fm           straight-line vector field between endpoint draws (pretraining)
enum class ParamMode { DsbOriginal, SDsb, TrDsb, FrDsb, Ddpm, Fm };

enum class Direction { Forward, Backward };

enum class InitStrategy { Scratch, InitB, InitBothSame, InitBothSeparate };

ParamMode mode_from_string(std::string_view s);
std::string to_string(ParamMode m);

Direction direction_from_string(std::string_view s);
std::string to_string(Direction d);

InitStrategy init_from_string(std::string_view s);
std::string to_string(InitStrategy s);

// Next-state modes share transition algebra; reparameterized modes share the
// pinned-endpoint posterior algebra.
inline bool is_next_state(ParamMode m) {
  return m == ParamMode::DsbOriginal || m == ParamMode::SDsb;
}
inline bool is_reparam(ParamMode m) {
  return m == ParamMode::TrDsb || m == ParamMode::FrDsb;
}
inline bool is_pretrain(ParamMode m) {
  return m == ParamMode::Ddpm || m == ParamMode::Fm;
}
inline bool is_bridge(ParamMode m) { return !is_pretrain(m); }

inline Direction opposite(Direction d) {
  return d == Direction::Forward ? Direction::Backward : Direction::Forward;
}

}  // namespace bridgelab
