#pragma once

#include <sstream>
#include <stdexcept>

#define LATNMT_THROW(msg)                 \
  do {                                    \
    std::ostringstream oss_;              \
    oss_ << msg;                          \
    throw std::runtime_error(oss_.str()); \
  } while (0)
