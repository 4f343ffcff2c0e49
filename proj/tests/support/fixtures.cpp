#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gmeta/form_ops.hpp"

namespace gmeta_test {

namespace fs = std::filesystem;

fs::path fixture_dir() { return fs::path(GMETA_FIXTURE_DIR); }

fs::path fixture(const std::string& relative) { return fixture_dir() / relative; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

gmeta::Form load_form(const std::string& corpus_name) {
  return gmeta::from_text(read_file(fixture("corpus/" + corpus_name)));
}

gmeta::PolicyContext load_policy_fixture(const std::string& name) {
  return gmeta::load_policy(read_file(fixture("policies/" + name)));
}

std::map<std::string, std::string> golden_hashes() {
  std::map<std::string, std::string> out;
  std::istringstream in(read_file(fixture("corpus_hashes.txt")));
  std::string digest, name;
  while (in >> digest >> name) out[name] = digest;
  return out;
}

std::vector<std::string> corpus_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : golden_hashes()) out.push_back(name);
  return out;
}

gmeta::PolicyContext example_policy() {
  gmeta::PolicyContext pi;
  pi.allowed_caps = {"model:*", "call:*"};
  pi.allowed_models = {"*"};
  pi.default_model_cost = 10;
  pi.compute_step_cost = 1;
  pi.budget = 100;
  return pi;
}

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  for (;;) {
    auto candidate = fs::temp_directory_path() /
                     ("gmeta-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace gmeta_test
