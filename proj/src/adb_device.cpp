#include <chrono>
#include <cstdio>
#include <thread>

#include "appray/explore.hpp"
#include "appray/raster.hpp"

namespace appray::explore {

AdbDevice::AdbDevice(std::string serial, int settle_ms)
    : serial_(std::move(serial)), settle_ms_(settle_ms) {}

std::string AdbDevice::run(const std::string& args) const {
  std::string cmd = "adb ";
  if (!serial_.empty()) cmd += "-s " + serial_ + " ";
  cmd += args;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe)
    throw AppError(ErrorKind::DeviceUnresponsive, "cannot spawn adb");
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
  const int rc = pclose(pipe);
  if (rc != 0)
    throw AppError(ErrorKind::DeviceUnresponsive,
                   "adb exited with status " + std::to_string(rc));
  return out;
}

ui::UiTree AdbDevice::current_tree() {
  const std::string xml = run("exec-out uiautomator dump /dev/tty");
  // uiautomator appends a status line after the document
  const size_t end = xml.rfind("</hierarchy>");
  if (end == std::string::npos)
    throw AppError(ErrorKind::DeviceUnresponsive, "no hierarchy in dump");
  ui::UiTree tree = ui::parse_hierarchy(xml.substr(0, end + 12));
  std::string focus =
      run("shell dumpsys activity activities | grep -m1 mResumedActivity || true");
  const size_t slash = focus.find('/');
  if (slash != std::string::npos) {
    size_t sp = focus.find(' ', slash);
    if (sp == std::string::npos) sp = focus.size();
    tree.activity = focus.substr(slash + 1, sp - slash - 1);
    while (!tree.activity.empty() &&
           (tree.activity.back() == '\n' || tree.activity.back() == '}' ||
            tree.activity.back() == ' '))
      tree.activity.pop_back();
  }
  return tree;
}

ui::Raster AdbDevice::screenshot() {
  const std::string png = run("exec-out screencap -p");
  return ui::decode_png_bytes(
      std::vector<uint8_t>(png.begin(), png.end()));
}

bool AdbDevice::perform(const Action& a) {
  try {
    switch (a.kind) {
      case ActionKind::kStop:
        return true;
      case ActionKind::kBack:
        run("shell input keyevent KEYCODE_BACK");
        break;
      case ActionKind::kTap: {
        if (!a.target) return false;
        ui::UiElement e;
        e.bounds = a.target->bounds;
        auto [x, y] = action_point(e);
        run("shell input tap " + std::to_string(x) + " " + std::to_string(y));
        break;
      }
      case ActionKind::kType: {
        if (!a.target) return false;
        ui::UiElement e;
        e.bounds = a.target->bounds;
        auto [x, y] = action_point(e);
        run("shell input tap " + std::to_string(x) + " " + std::to_string(y));
        std::string text = a.text.value_or("");
        for (char& c : text)
          if (c == ' ') c = '%';  // adb 'input text' space escape is %s
        run("shell input text \"" + text + "\"");
        break;
      }
      case ActionKind::kScroll: {
        const char* swipe = "shell input swipe 540 1200 540 600 300";
        if (a.direction) {
          switch (*a.direction) {
            case ScrollDirection::kUp: swipe = "shell input swipe 540 600 540 1200 300"; break;
            case ScrollDirection::kDown: swipe = "shell input swipe 540 1200 540 600 300"; break;
            case ScrollDirection::kLeft: swipe = "shell input swipe 900 960 200 960 300"; break;
            case ScrollDirection::kRight: swipe = "shell input swipe 200 960 900 960 300"; break;
          }
        }
        run(swipe);
        break;
      }
    }
  } catch (const AppError&) {
    return false;
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(settle_ms_));
  return true;
}

bool AdbDevice::app_alive() {
  try {
    return !run("shell dumpsys window | grep -m1 mCurrentFocus || true").empty();
  } catch (const AppError&) {
    return false;
  }
}

}  // namespace appray::explore
