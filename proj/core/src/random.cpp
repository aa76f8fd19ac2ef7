#include "svpf/random.hpp"

#include <sstream>

#include "svpf/error.hpp"

namespace svpf {

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::restore(const std::string& text) {
  std::istringstream is(text);
  std::mt19937_64 engine;
  is >> engine;
  if (is.fail()) throw InvalidArgument("malformed random stream state");
  engine_ = engine;
}

}  // namespace svpf
