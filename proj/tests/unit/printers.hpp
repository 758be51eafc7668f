#pragma once

// Stream operators so failed checks print label values.

#include <ostream>

#include "moodkit/annotations.hpp"

namespace moodkit {

inline std::ostream& operator<<(std::ostream& os, Mood m) { return os << mood_value(m); }
inline std::ostream& operator<<(std::ostream& os, Delta d) { return os << delta_class(d); }
inline std::ostream& operator<<(std::ostream& os, Emotion e) { return os << to_string(e); }

}  // namespace moodkit
