#include "cadet/log.hpp"

#include <atomic>
#include <mutex>

namespace cadet::log {
namespace {
std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;
constexpr const char* kTags[] = {"debug", "info", "warn", "error", "off"};
}  // namespace

Level level() { return g_level.load(); }
void set_level(Level lvl) { g_level.store(lvl); }

void write(Level lvl, std::string_view msg)
{
    std::lock_guard lock(g_mutex);
    std::cerr << "[" << kTags[static_cast<int>(lvl)] << "] " << msg << '\n';
}

}  // namespace cadet::log
