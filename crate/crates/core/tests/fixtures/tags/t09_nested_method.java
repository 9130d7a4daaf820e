package tags;

public class Host {
    static class Inner {
        void work() {
            System.out.println("inner");
        }
    }
}
