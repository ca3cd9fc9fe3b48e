#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#ifndef GUARDCACHE_TEST_DATA_DIR
#error "GUARDCACHE_TEST_DATA_DIR must point at tests/data"
#endif

namespace guardcache::testing {

inline std::string fixture_path(const std::string& name) {
  return std::string(GUARDCACHE_TEST_DATA_DIR) + "/" + name;
}

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace guardcache::testing
