package tags;

public class Container {
    private int a;

    private static final class Node {
        Node next;
    }
}
