// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cstdio>

int main() {
  std::printf("acceptance suite placeholder\n");
  return 1;
}
