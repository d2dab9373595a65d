#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <spdlog/spdlog.h>

int main(int argc, char** argv)
{
    // Failure paths are exercised on purpose; their warnings are noise here.
    spdlog::set_level(spdlog::level::off);
    doctest::Context context(argc, argv);
    return context.run();
}
