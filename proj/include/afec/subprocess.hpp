#pragma once

#include <string>
#include <string_view>

namespace afec {

/// A child process (`/bin/sh -c command`) spoken to one line at a time.
/// Not thread-safe; owners serialize access.
class LineProcess {
public:
    explicit LineProcess(std::string command);
    ~LineProcess();

    LineProcess(const LineProcess&) = delete;
    LineProcess& operator=(const LineProcess&) = delete;

    /// Sends `line` (newline appended) and returns the next output line
    /// without its terminator. Throws std::runtime_error if the child has
    /// exited or the pipe broke.
    std::string request(std::string_view line);

    const std::string& command() const noexcept { return command_; }

private:
    void write_all(std::string_view data);
    std::string read_line();

    std::string command_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

}  // namespace afec
