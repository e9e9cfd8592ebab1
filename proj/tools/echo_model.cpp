// Stand-in for an external wave model, for exercising the file-based
// adapter. Usage:
//   echo_model copy <series.csv> <out_path>   copy a precomputed output file
//   echo_model header <out_path>              write the CSV header only
//   echo_model fail [code]                    print a diagnostic and exit nonzero
//   echo_model sleep <seconds>                hang, for timeout checks
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "";
  if (mode == "copy" && argc == 4) {
    std::filesystem::copy_file(argv[2], argv[3], std::filesystem::copy_options::overwrite_existing);
    return 0;
  }
  if (mode == "header" && argc == 3) {
    std::ofstream(argv[2]) << "time,station,hs_m\n";
    return 0;
  }
  if (mode == "fail") {
    std::cerr << "echo_model: simulated solver divergence\n";
    return argc > 2 ? std::atoi(argv[2]) : 4;
  }
  if (mode == "sleep" && argc == 3) {
    std::this_thread::sleep_for(std::chrono::duration<double>(std::atof(argv[2])));
    return 0;
  }
  std::cerr << "usage: echo_model copy SRC OUT | header OUT | fail [CODE] | sleep SECONDS\n";
  return 64;
}
