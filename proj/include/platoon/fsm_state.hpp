#pragma once

#include <optional>
#include <string_view>

namespace platoon {

/// Operating mode of one CAV in the platoon state machine.
enum class FsmState { CarFollowing, LaneChange, BackToInitialLane, Split, Join };

std::string_view to_string(FsmState s);
std::optional<FsmState> fsm_state_from_string(std::string_view name);

}  // namespace platoon
