#pragma once

#include <patrol/patrol.h>

#include <stdexcept>
#include <string>

namespace patrol {

enum class Err : patrol_status {
  ok = PATROL_OK,
  unknown_glyph = PATROL_E_UNKNOWN_GLYPH,
  non_rectangular = PATROL_E_NON_RECTANGULAR,
  no_station = PATROL_E_NO_STATION,
  no_vertex = PATROL_E_NO_VERTEX,
  disconnected_graph = PATROL_E_DISCONNECTED_GRAPH,
  too_many_agents = PATROL_E_TOO_MANY_AGENTS,
  unknown_agent = PATROL_E_UNKNOWN_AGENT,
  invalid_action = PATROL_E_INVALID_ACTION,
  message_out_of_range = PATROL_E_MESSAGE_OUT_OF_RANGE,
  negative_idleness = PATROL_E_NEGATIVE_IDLENESS,
  out_of_range = PATROL_E_OUT_OF_RANGE,
  shape_mismatch = PATROL_E_SHAPE_MISMATCH,
  all_actions_masked = PATROL_E_ALL_ACTIONS_MASKED,
  non_finite = PATROL_E_NON_FINITE,
  no_path_to_station = PATROL_E_NO_PATH_TO_STATION,
  partition_failure = PATROL_E_PARTITION_FAILURE,
  insufficient_samples = PATROL_E_INSUFFICIENT_SAMPLES,
  invalid_horizon = PATROL_E_INVALID_HORIZON,
  length_mismatch = PATROL_E_LENGTH_MISMATCH,
  zero_probability = PATROL_E_ZERO_PROBABILITY,
  no_recorded_forward = PATROL_E_NO_RECORDED_FORWARD,
  bad_config = PATROL_E_BAD_CONFIG,
  io = PATROL_E_IO,
  invalid_argument = PATROL_E_INVALID_ARGUMENT,
  internal = PATROL_E_INTERNAL,
};

class Error : public std::runtime_error {
 public:
  Error(Err code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Err code() const { return code_; }
  patrol_status status() const { return static_cast<patrol_status>(code_); }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace patrol
