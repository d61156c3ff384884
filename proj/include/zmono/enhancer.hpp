#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "zmono/image.hpp"

namespace zmono {

struct HookError : std::runtime_error {
  HookError(int view_, const std::string& what) : std::runtime_error(what), view(view_) {}
  int view;
};

// Stand-in for a learned view restorer. Identity returns its input;
// ExternalCommand runs `command` through /bin/sh with {in} and {out}
// replaced by PNG paths and reads the result back.
struct EnhancerHook {
  enum class Mode { Identity, ExternalCommand };
  Mode mode = Mode::Identity;
  std::string command;
  double timeout_s = 300.0;
  std::string work_dir;  // empty: a fresh directory under the system temp dir
  int max_parallel = 1;

  // Enhanced copies in input order. Throws HookError naming the first
  // failing view.
  std::vector<RgbImage> apply(const std::vector<RgbImage>& views) const;
};

}  // namespace zmono
