#pragma once

#include <ostream>
#include <string>

#include "cds/error.hpp"

namespace cds::cli {

// Exit statuses shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitBackend = 2;
inline constexpr int kExitNumerical = 3;

int exit_code_for(ErrorCode code);

struct RunArgs {
  std::string config;
  std::string source;       // CDST path, or an image when the backend is remote
  std::string out;          // overrides output.dir
  std::string backend_url;  // overrides backend.url and CDS_BACKEND_URL
  bool dump_gradients = false;
};

// Each command reports failures as a single line on err:
//   error kind=<code> reason=<message>
int cmd_edit(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunArgs& args, const std::string& axis, const std::string& values,
              bool concurrent, std::ostream& out, std::ostream& err);
int cmd_compare(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_check_backend(const std::string& url, std::ostream& out, std::ostream& err);
// Writes the analytic backend's source latent to dest.
int cmd_source(const RunArgs& args, const std::string& dest, std::ostream& out,
               std::ostream& err);

}  // namespace cds::cli
