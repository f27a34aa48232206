// Child-side implementation of the external-predictor line protocol, used
// as a loopback fixture. Modes:
//   --dist a,b,...   reply with this fixed distribution for every sample
//   --logistic       reply [1-s, s] with s = sigmoid(sum of features)
//   --fail-handshake reply garbage to HELLO
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  std::string dist;
  bool logistic = false;
  bool fail_handshake = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--dist" && i + 1 < argc) dist = argv[++i];
    if (arg == "--logistic") logistic = true;
    if (arg == "--fail-handshake") fail_handshake = true;
  }

  std::string line;
  if (!std::getline(std::cin, line)) return 1;
  int p = 0, n_classes = 0;
  if (std::sscanf(line.c_str(), "HELLO %d %d", &p, &n_classes) != 2) return 1;
  std::cout << (fail_handshake ? "NOPE" : "OK") << "\n" << std::flush;
  if (fail_handshake) return 0;

  while (std::getline(std::cin, line)) {
    if (line == "BYE") return 0;
    long k = 0;
    if (std::sscanf(line.c_str(), "BATCH %ld", &k) != 1) return 1;
    std::ostringstream reply;
    for (long i = 0; i < k; ++i) {
      std::string row;
      if (!std::getline(std::cin, row)) return 1;
      if (logistic) {
        std::stringstream ss(row);
        std::string cell;
        double sum = 0.0;
        while (std::getline(ss, cell, ',')) sum += std::stod(cell);
        const double s = 1.0 / (1.0 + std::exp(-sum));
        reply.precision(17);
        reply << 1.0 - s << "," << s << "\n";
      } else {
        reply << dist << "\n";
      }
    }
    std::cout << reply.str() << std::flush;
  }
  return 0;
}
