#pragma once

#include <string>
#include <vector>

#include "tihdp/trajlog.hpp"

namespace tihdp {

struct RenderResult {
    std::vector<std::string> files;
    std::string warning;  // carried over from a truncated log
};

// Renders one episode log as SVG files under out_dir:
//   trajectory_###.svg   top-down paths per window of `window_steps` steps,
//                        with goal cross marks and start/end markers
//   priorities_robot_#.svg  stacked priority shares over the full episode
// Output bytes are a pure function of the log contents. An empty log yields
// a single header-only trajectory figure.
RenderResult replay_render(const Trajectory& traj, const std::string& out_dir,
                           int window_steps = 100);

}  // namespace tihdp
