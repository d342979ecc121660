int main(){} // placeholder
