public class NoPackage {
    void go() {
        int i = 0;
        i++;
    }
}
