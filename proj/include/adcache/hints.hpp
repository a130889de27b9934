#pragma once

#include <string>

#include "adcache/trace.hpp"

namespace adcache {

/// Developer customization for one method. NeverTrack implies NeverCache;
/// AlwaysCache forces a Cacheable verdict regardless of traces, NeverCache
/// blocks admission regardless of verdict.
enum class HintMode { AlwaysTrack, NeverTrack, NeverCache, AlwaysCache };

struct TrackingHint {
    MethodId method;
    HintMode mode = HintMode::AlwaysTrack;
};

const char* to_string(HintMode mode);

} // namespace adcache
