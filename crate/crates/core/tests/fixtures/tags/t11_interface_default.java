package tags;

public interface Greeter {
    String name();

    default String greet() {
        return "hello " + name();
    }
}
